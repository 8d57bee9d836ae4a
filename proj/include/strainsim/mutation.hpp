#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/buildchain.hpp"
#include "strainsim/error.hpp"
#include "strainsim/model.hpp"
#include "strainsim/trace.hpp"

namespace strainsim {

struct MutationOp {
    enum class Kind {
        RenamePackage,
        RenameDisplay,
        SwapIcon,
        AddTrait,
        RemoveTrait,
        EditSource,
        AddLibrary,
        RemoveLibrary,
    };

    Kind kind = Kind::RenameDisplay;
    std::string name;        // new name / trait / target unit, per kind
    Bytes content;           // AddLibrary payload
    std::size_t offset = 0;  // EditSource byte position
    std::uint8_t value = 0;  // EditSource replacement byte

    static MutationOp make(Kind k, std::string name, Bytes content = {}, std::size_t off = 0,
                           std::uint8_t val = 0) {
        MutationOp op;
        op.kind = k;
        op.name = std::move(name);
        op.content = std::move(content);
        op.offset = off;
        op.value = val;
        return op;
    }

    static MutationOp rename_package(std::string n) { return make(Kind::RenamePackage, std::move(n)); }
    static MutationOp rename_display(std::string n) { return make(Kind::RenameDisplay, std::move(n)); }
    static MutationOp swap_icon(std::string n) { return make(Kind::SwapIcon, std::move(n)); }
    static MutationOp add_trait(std::string t) { return make(Kind::AddTrait, std::move(t)); }
    static MutationOp remove_trait(std::string t) { return make(Kind::RemoveTrait, std::move(t)); }
    static MutationOp edit_source(std::string unit, std::size_t off, std::uint8_t val) {
        return make(Kind::EditSource, std::move(unit), {}, off, val);
    }
    static MutationOp add_library(std::string n, Bytes b) {
        return make(Kind::AddLibrary, std::move(n), std::move(b));
    }
    static MutationOp remove_library(std::string n) { return make(Kind::RemoveLibrary, std::move(n)); }
};

inline const char* op_name(MutationOp::Kind k) {
    switch (k) {
        case MutationOp::Kind::RenamePackage: return "rename_package";
        case MutationOp::Kind::RenameDisplay: return "rename_display";
        case MutationOp::Kind::SwapIcon: return "swap_icon";
        case MutationOp::Kind::AddTrait: return "add_trait";
        case MutationOp::Kind::RemoveTrait: return "remove_trait";
        case MutationOp::Kind::EditSource: return "edit_source";
        case MutationOp::Kind::AddLibrary: return "add_library";
        case MutationOp::Kind::RemoveLibrary: return "remove_library";
    }
    return "?";
}

inline std::string describe(const MutationOp& op) {
    return std::string(op_name(op.kind)) + ":" + op.name;
}

// Produces the child strain: ops applied in order, generation bumped, parent
// recorded, identity re-derived. An empty op list is not a mutation; it
// would mint a second node for the same strain.
inline Genome mutate(const Genome& parent, const std::vector<MutationOp>& ops) {
    if (ops.empty()) throw InvalidOp("empty op list");

    Genome child = parent;
    for (const auto& op : ops) {
        switch (op.kind) {
            case MutationOp::Kind::RenamePackage:
                if (op.name.empty()) throw InvalidOp("rename_package: empty name");
                child.package_name = op.name;
                break;
            case MutationOp::Kind::RenameDisplay:
                if (op.name.empty()) throw InvalidOp("rename_display: empty name");
                child.display_name = op.name;
                break;
            case MutationOp::Kind::SwapIcon:
                if (op.name.empty()) throw InvalidOp("swap_icon: empty icon id");
                child.icon_id = op.name;
                break;
            case MutationOp::Kind::AddTrait:
                if (child.traits.count(op.name)) throw InvalidOp("add_trait: already present: " + op.name);
                child.traits.insert(op.name);
                break;
            case MutationOp::Kind::RemoveTrait:
                if (!child.traits.count(op.name)) throw InvalidOp("remove_trait: absent: " + op.name);
                child.traits.erase(op.name);
                break;
            case MutationOp::Kind::EditSource: {
                auto it = child.sources.find(op.name);
                if (it == child.sources.end()) throw InvalidOp("edit_source: no unit: " + op.name);
                if (op.offset >= it->second.content.size())
                    throw InvalidOp("edit_source: offset out of range in " + op.name);
                it->second.content[op.offset] = op.value;
                break;
            }
            case MutationOp::Kind::AddLibrary:
                if (child.libraries.count(op.name))
                    throw InvalidOp("add_library: already present: " + op.name);
                child.libraries.emplace(op.name, op.content);
                break;
            case MutationOp::Kind::RemoveLibrary:
                if (!child.libraries.count(op.name)) throw InvalidOp("remove_library: absent: " + op.name);
                child.libraries.erase(op.name);
                break;
        }
    }

    child.generation = parent.generation + 1;
    child.parent_strain = parent.strain_id;
    child.strain_id = derive_strain_id(child);
    return child;
}

// Rebuild the same genome under a different certificate; content hash moves
// with the cert, which is what defeats cert blacklists.
inline SignedPackage resign(const SignedPackage& pkg, const Certificate& new_cert,
                            BuildCache& cache, const DeviceClass& cls, double temperature,
                            std::uint64_t base_package_bytes) {
    if (!pkg.embedded_genome) throw Error("resign: package carries no genome");
    return full_build(pkg.embedded_genome, pkg.built_for, new_cert, cache, cls, temperature,
                      base_package_bytes)
        .first;
}

struct LineageNode {
    std::optional<StrainId> parent;
    std::uint32_t generation = 0;
    SimTime birth_time = 0;
    std::string birth_device;
};

// Genealogy of strains; parent links are acyclic by construction because a
// child can only be inserted after its parent.
class Lineage {
  public:
    void insert(const StrainId& id, LineageNode node) {
        if (nodes_.count(id)) return;  // content identity: re-birth is the same strain
        if (node.parent) {
            auto it = nodes_.find(*node.parent);
            if (it == nodes_.end()) throw UnknownStrain(node.parent->short_hex());
            if (node.generation != it->second.generation + 1)
                throw Error("lineage: generation must be parent generation + 1");
        } else if (node.generation != 0) {
            throw Error("lineage: root strain must have generation 0");
        }
        nodes_.emplace(id, std::move(node));
    }

    bool contains(const StrainId& id) const { return nodes_.count(id) != 0; }

    const LineageNode& at(const StrainId& id) const {
        auto it = nodes_.find(id);
        if (it == nodes_.end()) throw UnknownStrain(id.short_hex());
        return it->second;
    }

    // Nearest-first chain ending at a generation-0 root; length == generation.
    std::vector<StrainId> ancestors(const StrainId& id) const {
        std::vector<StrainId> out;
        const LineageNode* node = &at(id);
        while (node->parent) {
            out.push_back(*node->parent);
            node = &at(*node->parent);
        }
        return out;
    }

    // Strain plus all transitive descendants.
    std::set<StrainId> subtree(const StrainId& root) const {
        at(root);
        std::set<StrainId> out{root};
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& [id, node] : nodes_) {
                if (!out.count(id) && node.parent && out.count(*node.parent)) {
                    out.insert(id);
                    grew = true;
                }
            }
        }
        return out;
    }

    const std::map<StrainId, LineageNode>& nodes() const { return nodes_; }

  private:
    std::map<StrainId, LineageNode> nodes_;
};

enum class FitnessScope { strain_only, subtree };

struct FitnessMetrics {
    std::uint32_t devices_reached = 0;
    bool survived_blacklist = true;
    std::optional<double> escape_time_s;
};

namespace detail {
// Trace footers list strains in id order, not birth order, so insert in
// passes: parents first.
inline Lineage lineage_from_trace(const Trace& trace) {
    std::vector<std::pair<StrainId, LineageNode>> pending;
    for (const auto& rec : trace.records) {
        if (rec.kind != "lineage") continue;
        LineageNode node;
        node.generation = static_cast<std::uint32_t>(rec.get_u64("generation"));
        node.birth_time = ms_from_seconds(rec.get_double("birth_s"));
        node.birth_device = rec.get("device");
        const std::string& parent_hex = rec.get("parent");
        if (parent_hex != "none") node.parent = ContentHash::from_hex(parent_hex);
        pending.emplace_back(ContentHash::from_hex(rec.get("strain")), std::move(node));
    }

    Lineage lineage;
    while (!pending.empty()) {
        std::vector<std::pair<StrainId, LineageNode>> next;
        for (auto& [id, node] : pending) {
            if (!node.parent || lineage.contains(*node.parent))
                lineage.insert(id, std::move(node));
            else
                next.emplace_back(id, std::move(node));
        }
        if (next.size() == pending.size())
            throw Error("trace lineage records do not form a tree");
        pending = std::move(next);
    }
    return lineage;
}
}  // namespace detail

// Measured spread/survival of one strain in a finished run. devices_reached
// counts distinct devices that installed the strain itself or, in subtree
// scope, any descendant.
inline FitnessMetrics fitness(const Trace& trace, const StrainId& strain, FitnessScope scope) {
    Lineage lineage = detail::lineage_from_trace(trace);
    std::set<std::string> wanted_hex;
    if (scope == FitnessScope::subtree) {
        for (const auto& id : lineage.subtree(strain)) wanted_hex.insert(id.hex());
    } else {
        lineage.at(strain);  // throws UnknownStrain
        wanted_hex.insert(strain.hex());
    }

    FitnessMetrics out;
    std::set<std::string> devices;
    std::optional<SimTime> first_blacklisted;
    bool delivered_after_blacklist = false;
    bool ever_blacklisted = false;

    const std::string strain_hex = strain.hex();
    for (const auto& rec : trace.records) {
        if (rec.kind == "install" && wanted_hex.count(rec.get("strain"))) {
            const std::string& outcome = rec.get("outcome");
            if (outcome == "updated" || outcome == "side_by_side") devices.insert(rec.get("device"));
        } else if (rec.kind == "escape" && rec.get("strain") == strain_hex) {
            out.escape_time_s = seconds_from_ms(rec.time);
        } else if (rec.kind == "blacklist_add" && rec.get("kind") == "hash") {
            if (const std::string* s = rec.find("strain"); s && *s == strain_hex) {
                ever_blacklisted = true;
                if (!first_blacklisted) first_blacklisted = rec.time;
            }
        } else if (rec.kind == "transfer_result" && rec.get("strain") == strain_hex) {
            if (rec.get("outcome") == "delivered" && first_blacklisted &&
                rec.time >= *first_blacklisted)
                delivered_after_blacklist = true;
        }
    }

    out.devices_reached = static_cast<std::uint32_t>(devices.size());
    out.survived_blacklist = !ever_blacklisted || delivered_after_blacklist;
    return out;
}

}  // namespace strainsim
