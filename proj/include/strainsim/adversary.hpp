#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "strainsim/error.hpp"
#include "strainsim/model.hpp"

namespace strainsim {

// Threat model: full control of the wire (observe, block, delay, replay,
// modify), a bounded number of device compromises, and no ability to break
// the crypto: tampering is always detectable, signatures never forged.

enum class MonitorPolicy { internet_only, all_links };

struct AdversaryConfig {
    MonitorPolicy monitor = MonitorPolicy::internet_only;
    double observe_probability = 1.0;  // per proximity transfer, all_links only
    double modify_probability = 0.0;   // per monitored transfer
    double delay_probability = 0.0;
    double delay_extra_seconds = 0.0;
    std::uint32_t compromise_budget = 0;
    bool blacklist_compromised_hashes = false;
    bool blacklist_compromised_certs = false;
};

enum class BlockReason { hash, cert };

struct BlockDecision {
    bool blocked = false;
    BlockReason reason = BlockReason::hash;
    std::string entry;  // hex hash or cert id that matched
};

struct CapturedTransfer {
    SignedPackage pkg;
    std::string receiver;
    SimTime time = 0;
};

struct AdversaryAction {
    SimTime time = 0;
    std::string kind;
    std::string detail;
};

struct RevealedApp {
    ContentHash package_hash;
    std::optional<StrainId> strain;  // absent for stripped packages
    std::string cert_id;
};

struct CompromiseRevealed {
    std::vector<RevealedApp> apps;
};

class AdversaryState {
  public:
    AdversaryConfig config;
    std::set<ContentHash> hash_blacklist;
    std::set<std::string> cert_blacklist;
    std::set<ContentHash> observed;
    std::vector<CapturedTransfer> captures;
    std::uint32_t compromise_budget = 0;
    std::vector<AdversaryAction> actions_log;

    explicit AdversaryState(AdversaryConfig cfg = {})
        : config(cfg), compromise_budget(cfg.compromise_budget) {}

    // Passive tap: records what crossed the wire, never alters it.
    void observe(const SignedPackage& pkg, const std::string& receiver, SimTime now) {
        observed.insert(pkg.content_hash);
        captures.push_back({pkg, receiver, now});
        log(now, "observe", pkg.content_hash.hex());
    }

    BlockDecision block_decision(const SignedPackage& pkg, SimTime now) {
        BlockDecision d;
        if (hash_blacklist.count(pkg.content_hash)) {
            d = {true, BlockReason::hash, pkg.content_hash.hex()};
        } else if (cert_blacklist.count(pkg.cert.cert_id)) {
            d = {true, BlockReason::cert, pkg.cert.cert_id};
        }
        log(now, d.blocked ? "block" : "allow",
            d.blocked ? (d.reason == BlockReason::hash ? "hash=" : "cert=") + d.entry
                      : pkg.content_hash.hex());
        return d;
    }

    // In-flight tamper: the receiver gets a copy that can no longer verify.
    SignedPackage modify(SignedPackage copy, SimTime now) {
        copy.corrupted = true;
        log(now, "modify", copy.content_hash.hex());
        return copy;
    }

    double delay_extra(SimTime now) {
        log(now, "delay", fmt_double_seconds(config.delay_extra_seconds));
        return config.delay_extra_seconds;
    }

    // Most recent capture originally addressed to `receiver`, for re-delivery.
    const CapturedTransfer* pick_replay(const std::string& receiver, SimTime now) {
        for (auto it = captures.rbegin(); it != captures.rend(); ++it) {
            if (it->receiver == receiver) {
                log(now, "replay", it->pkg.content_hash.hex());
                return &*it;
            }
        }
        return nullptr;
    }

    // Reads out everything the device stores. What to do with the loot
    // (seed blacklists, usually) is the caller's policy.
    CompromiseRevealed compromise(DeviceState& dev, SimTime now) {
        if (compromise_budget == 0) throw BudgetExhausted();
        --compromise_budget;
        dev.compromised = true;

        CompromiseRevealed out;
        for (const auto& [name, app] : dev.installed) {
            RevealedApp rev;
            rev.package_hash = app.pkg.content_hash;
            rev.cert_id = app.pkg.cert.cert_id;
            if (app.pkg.embedded_genome) rev.strain = app.pkg.embedded_genome->strain_id;
            out.apps.push_back(std::move(rev));
        }
        log(now, "compromise", dev.device_id);
        return out;
    }

    void blacklist_hash(const ContentHash& h, SimTime now, const std::string& source) {
        if (hash_blacklist.insert(h).second) log(now, "blacklist_hash", source + ":" + h.hex());
    }

    void blacklist_cert(const std::string& cert_id, SimTime now, const std::string& source) {
        if (cert_blacklist.insert(cert_id).second) log(now, "blacklist_cert", source + ":" + cert_id);
    }

  private:
    static std::string fmt_double_seconds(double v) { return std::to_string(v); }

    void log(SimTime now, std::string kind, std::string detail) {
        actions_log.push_back({now, std::move(kind), std::move(detail)});
    }
};

}  // namespace strainsim
