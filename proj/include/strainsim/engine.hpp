#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "strainsim/adversary.hpp"
#include "strainsim/buildchain.hpp"
#include "strainsim/device.hpp"
#include "strainsim/error.hpp"
#include "strainsim/model.hpp"
#include "strainsim/mutation.hpp"
#include "strainsim/netmodel.hpp"
#include "strainsim/rng.hpp"
#include "strainsim/scenario.hpp"
#include "strainsim/trace.hpp"

namespace strainsim {

namespace detail {

struct EvScriptedEncounter {
    std::size_t index;
};
struct EvRegionTick {
    std::string region;
};
struct EvBulkStart {
    std::uint64_t transfer;
};
struct EvTransferOutcome {
    std::uint64_t transfer;
};
struct EvBuildStart {
    std::string device;
    std::shared_ptr<const Genome> genome;
    Certificate cert;
    std::string purpose;  // origin | rebuild | mutation | scripted
};
struct EvBuildEnd {
    std::string device;
    SignedPackage pkg;
    BuildReport report;
    std::string purpose;
};
struct EvKillSwitch {
    std::string region;
    bool up;
};
struct EvMove {
    std::string device;
    std::string region;
};
struct EvCompromise {
    std::string device;
};
struct EvScriptedBuild {
    std::string device;
};
struct EvUplinkProbe {
    std::string device;
};
struct EvReplay {
    std::string receiver;
};
struct EvBlacklistInitial {};

using EventPayload =
    std::variant<EvScriptedEncounter, EvRegionTick, EvBulkStart, EvTransferOutcome, EvBuildStart,
                 EvBuildEnd, EvKillSwitch, EvMove, EvCompromise, EvScriptedBuild, EvUplinkProbe,
                 EvReplay, EvBlacklistInitial>;

struct QueuedEvent {
    SimTime time;
    std::uint64_t seq;
    EventPayload payload;
};

struct QueuedEventAfter {
    bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;  // insertion order breaks ties
    }
};

struct DeviceRt {
    DeviceState st;
    BuildCache cache;
    SimTime busy_until = 0;
    SimTime last_thermal = 0;
    std::uint64_t delivered_since_mutation = 0;
    bool mutation_pending = false;
    std::set<StrainId> pending_builds;
};

struct TransferCtx {
    std::string sender, receiver;
    SignedPackage pkg;
    SimTime start = 0;
    SimTime window_end = 0;
    SimTime planned_end = 0;  // handshake + bulk + adversary delay
    bool monitored = false;
};

struct StrainMeta {
    std::string origin_region;
    bool origin_offline = false;
    bool escaped = false;
};

// One simulation run: owns every piece of mutable state and processes the
// event queue strictly single-threaded in (time, seq) order.
class Engine {
  public:
    Engine(const Scenario& sc, std::uint64_t seed)
        : sc_(sc),
          rng_(seed),
          rng_actions_(rng_.stream("adversary.actions")),
          rng_observe_(rng_.stream("adversary.observe")),
          rng_mutation_(rng_.stream("mutation")),
          adversary_(sc.adversary.base) {
        trace_.seed = seed;
        trace_.scenario_name = sc.name;
        trace_.scenario_hash = sc.scenario_hash.empty() ? "unhashed" : sc.scenario_hash;
    }

    Trace run() {
        setup();
        const std::optional<SimTime> stop_ms =
            sc_.stop_time_s ? std::optional<SimTime>(ms_from_seconds(*sc_.stop_time_s))
                            : std::nullopt;
        while (!queue_.empty()) {
            QueuedEvent ev = queue_.top();
            if (stop_ms && ev.time > *stop_ms) break;
            queue_.pop();
            now_ = ev.time;
            std::visit([&](const auto& payload) { handle(payload); }, ev.payload);
        }
        const SimTime end_time = stop_ms ? *stop_ms : now_;
        write_footer(end_time);
        return std::move(trace_);
    }

  private:
    // ---- setup ----------------------------------------------------------

    void setup() {
        auto issues = validate(sc_);
        if (!issues.empty()) {
            std::string msg = "scenario invalid:";
            for (const auto& i : issues)
                msg += "\n  line " + std::to_string(i.line) + ": " + i.message;
            throw ValidationError(msg);
        }

        rates_ = build_rate_matrix(sc_);

        for (const auto& [name, cc] : sc_.classes)
            classes_.emplace(name, std::make_shared<DeviceClass>(cc.cls));

        for (const auto& [id, rc] : sc_.regions) {
            Region r;
            r.region_id = id;
            r.internet_up = rc.internet_up;
            net_.add_region(std::move(r));
        }

        for (const auto& [id, dc] : sc_.devices) {
            DeviceRt rt;
            rt.st.device_id = id;
            rt.st.cls = classes_.at(dc.class_name);
            rt.st.platform = {dc.api_level, dc.cpu_arch};
            rt.st.region = dc.region;
            devices_.emplace(id, std::move(rt));
            net_.region(dc.region).members.insert(id);
        }

        for (const auto& cert_id : sc_.adversary.blacklist_certs) {
            adversary_.blacklist_cert(cert_id, 0, "scripted");
            TraceRecord& rec = log("blacklist_add", 0);
            field(rec, "kind", "cert");
            field(rec, "value", cert_id);
            field(rec, "source", "scripted");
        }

        initial_genome_ = std::make_shared<const Genome>(make_initial_genome(sc_.strain));
        initial_cert_ = Certificate{sc_.strain.cert_id, sc_.strain.cert_is_debug};
        register_strain(*initial_genome_, sc_.strain.origin, 0);

        // The hash a wire censor would blacklist: the initial strain as built
        // for the origin platform under the configured cert. Computed out of
        // band; full_build is pure so this never perturbs device state.
        {
            const DeviceRt& origin = devices_.at(sc_.strain.origin);
            BuildCache scratch;
            initial_pkg_hash_ = full_build(initial_genome_, origin.st.platform, initial_cert_,
                                           scratch, *origin.st.cls, 0.0, sc_.base_package_bytes)
                                    .first.content_hash;
        }

        if (sc_.strain.prebuilt) {
            const DeviceRt& origin = devices_.at(sc_.strain.origin);
            BuildCache scratch;  // built before the run; origin's own cache stays cold
            SignedPackage pkg = full_build(initial_genome_, origin.st.platform, initial_cert_,
                                           scratch, *origin.st.cls, 0.0, sc_.base_package_bytes)
                                    .first;
            deliver(sc_.strain.origin, pkg, "origin");
        } else {
            schedule(0, EvBuildStart{sc_.strain.origin, initial_genome_, initial_cert_, "origin"});
        }

        if (sc_.adversary.blacklist_initial_strain_at_s)
            schedule(ms_from_seconds(*sc_.adversary.blacklist_initial_strain_at_s),
                     EvBlacklistInitial{});

        for (std::size_t i = 0; i < sc_.encounters.size(); ++i)
            schedule(ms_from_seconds(sc_.encounters[i].time_s), EvScriptedEncounter{i});
        for (const auto& mv : sc_.moves)
            schedule(ms_from_seconds(mv.time_s), EvMove{mv.device, mv.arg});
        for (const auto& ks : sc_.kill_switches)
            schedule(ms_from_seconds(ks.time_s), EvKillSwitch{ks.region, ks.up});
        for (const auto& cmd : sc_.compromises)
            schedule(ms_from_seconds(cmd.time_s), EvCompromise{cmd.device});
        for (const auto& cmd : sc_.builds)
            schedule(ms_from_seconds(cmd.time_s), EvScriptedBuild{cmd.device});
        for (const auto& cmd : sc_.uplink_probes)
            schedule(ms_from_seconds(cmd.time_s), EvUplinkProbe{cmd.device});
        for (const auto& cmd : sc_.replays)
            schedule(ms_from_seconds(cmd.time_s), EvReplay{cmd.device});

        for (const auto& [id, rc] : sc_.regions) {
            if (!rc.encounter_mean_interval_s) continue;
            auto [it, fresh] = region_rngs_.emplace(id, rng_.stream("encounters." + id));
            schedule(ms_from_seconds(it->second.next_exponential(*rc.encounter_mean_interval_s)),
                     EvRegionTick{id});
        }
    }

    // ---- event handlers --------------------------------------------------

    void handle(const EvScriptedEncounter& e) {
        const EncounterConfig& ec = sc_.encounters[e.index];
        run_encounter(ec.from, ec.to, ms_from_seconds(ec.window_s), /*directed=*/true);
    }

    void handle(const EvRegionTick& e) {
        const RegionConfig& rc = sc_.regions.at(e.region);
        RngStream& rng = region_rngs_.at(e.region);

        const auto& members = net_.region(e.region).members;
        if (members.size() >= 2) {
            std::uint64_t ai = rng.next_below(members.size());
            std::uint64_t bi = rng.next_below(members.size() - 1);
            if (bi >= ai) ++bi;
            auto it_a = members.begin();
            std::advance(it_a, static_cast<long>(ai));
            auto it_b = members.begin();
            std::advance(it_b, static_cast<long>(bi));
            run_encounter(*it_a, *it_b, ms_from_seconds(rc.encounter_window_s),
                          /*directed=*/false);
        }

        schedule(now_ + ms_from_seconds(rng.next_exponential(*rc.encounter_mean_interval_s)),
                 EvRegionTick{e.region});
    }

    void run_encounter(const std::string& a, const std::string& b, SimTime window_ms,
                       bool directed) {
        DeviceRt& da = devices_.at(a);
        DeviceRt& db = devices_.at(b);

        std::string sender = a, receiver = b;
        const InstalledApp* payload = latest_install(da.st);
        if (!directed && !payload) {
            payload = latest_install(db.st);
            sender = b;
            receiver = a;
        }

        const bool same_region = da.st.region == db.st.region;

        TraceRecord& rec = log("encounter", now_);
        field(rec, "a", a);
        field(rec, "b", b);
        field(rec, "window_s", fmt_seconds(window_ms));
        field(rec, "sender", payload ? sender : "none");
        if (!same_region) {
            field(rec, "note", "not_in_proximity");
            return;
        }
        if (!payload) {
            field(rec, "note", "no_payload");
            return;
        }

        start_transfer(sender, receiver, payload->pkg, window_ms);
    }

    void start_transfer(const std::string& sender, const std::string& receiver,
                        const SignedPackage& pkg, SimTime window_ms) {
        TransferCtx ctx;
        ctx.sender = sender;
        ctx.receiver = receiver;
        ctx.pkg = pkg;
        ctx.start = now_;
        ctx.window_end = now_ + window_ms;

        if (adversary_.config.monitor == MonitorPolicy::all_links)
            ctx.monitored = rng_observe_.next_unit() < adversary_.config.observe_probability;

        const SimTime duration = transfer_duration_ms(rates_, device_class_name(sender),
                                                      device_class_name(receiver), pkg.size_bytes);
        SimTime delay_ms = 0;
        if (ctx.monitored && adversary_.config.delay_probability > 0.0 &&
            rng_actions_.next_unit() < adversary_.config.delay_probability) {
            delay_ms = ms_from_seconds(adversary_.delay_extra(now_));
            TraceRecord& rec = log("adversary_delay", now_);
            field(rec, "sender", sender);
            field(rec, "receiver", receiver);
            field(rec, "extra_s", fmt_seconds(delay_ms));
        }
        ctx.planned_end = now_ + duration + delay_ms;

        const std::uint64_t id = ++transfer_seq_;
        TraceRecord& rec = log("transfer_phase", now_);
        field(rec, "phase", "handshake_start");
        field(rec, "sender", sender);
        field(rec, "receiver", receiver);
        field(rec, "package_hash", pkg.content_hash.hex());

        const SimTime handshake_end = now_ + ms_from_seconds(rates_.handshake_seconds);
        if (handshake_end <= ctx.window_end) schedule(handshake_end, EvBulkStart{id});
        schedule(std::min(ctx.planned_end, ctx.window_end), EvTransferOutcome{id});
        transfers_.emplace(id, std::move(ctx));
    }

    void handle(const EvBulkStart& e) {
        auto it = transfers_.find(e.transfer);
        if (it == transfers_.end()) return;
        TransferCtx& ctx = it->second;

        TraceRecord& rec = log("transfer_phase", now_);
        field(rec, "phase", "bulk_start");
        field(rec, "sender", ctx.sender);
        field(rec, "receiver", ctx.receiver);
        field(rec, "package_hash", ctx.pkg.content_hash.hex());

        if (ctx.monitored) {
            adversary_.observe(ctx.pkg, ctx.receiver, now_);
            TraceRecord& obs = log("adversary_observe", now_);
            field(obs, "sender", ctx.sender);
            field(obs, "receiver", ctx.receiver);
            field(obs, "package_hash", ctx.pkg.content_hash.hex());
        }
    }

    void handle(const EvTransferOutcome& e) {
        auto it = transfers_.find(e.transfer);
        if (it == transfers_.end()) return;
        TransferCtx ctx = std::move(it->second);
        transfers_.erase(it);

        const bool in_time = ctx.planned_end <= ctx.window_end;
        if (!in_time) {
            log_transfer_result(ctx, TransferResult::OutOfTime);
            return;
        }

        if (ctx.monitored) {
            BlockDecision decision = adversary_.block_decision(ctx.pkg, now_);
            if (decision.blocked) {
                TraceRecord& rec = log("adversary_block", now_);
                field(rec, "package_hash", ctx.pkg.content_hash.hex());
                field(rec, "reason", decision.reason == BlockReason::hash ? "hash" : "cert");
                field(rec, "entry", decision.entry);
                log_transfer_result(ctx, TransferResult::Blocked);
                on_sender_blocked(ctx.sender);
                return;
            }
            if (adversary_.config.modify_probability > 0.0 &&
                rng_actions_.next_unit() < adversary_.config.modify_probability) {
                SignedPackage corrupted = adversary_.modify(ctx.pkg, now_);
                TraceRecord& rec = log("adversary_modify", now_);
                field(rec, "package_hash", ctx.pkg.content_hash.hex());
                log_phase_bulk_end(ctx);
                ctx.pkg = std::move(corrupted);
                log_transfer_result(ctx, TransferResult::CorruptedDelivered);
                deliver(ctx.receiver, ctx.pkg, "transfer");  // verify fails, nothing installs
                return;
            }
        }

        log_phase_bulk_end(ctx);
        log_transfer_result(ctx, TransferResult::Delivered);
        deliver(ctx.receiver, ctx.pkg, "transfer");
        on_sender_delivered(ctx.sender);
    }

    void log_phase_bulk_end(const TransferCtx& ctx) {
        TraceRecord& rec = log("transfer_phase", now_);
        field(rec, "phase", "bulk_end");
        field(rec, "sender", ctx.sender);
        field(rec, "receiver", ctx.receiver);
        field(rec, "package_hash", ctx.pkg.content_hash.hex());
    }

    void log_transfer_result(const TransferCtx& ctx, TransferResult result) {
        TraceRecord& rec = log("transfer_result", now_);
        field(rec, "sender", ctx.sender);
        field(rec, "receiver", ctx.receiver);
        field(rec, "sender_class", device_class_name(ctx.sender));
        field(rec, "receiver_class", device_class_name(ctx.receiver));
        field(rec, "package_hash", ctx.pkg.content_hash.hex());
        field(rec, "strain",
              ctx.pkg.embedded_genome ? ctx.pkg.embedded_genome->strain_id.hex() : "none");
        field(rec, "outcome", to_string(result));
        field(rec, "duration_s", fmt_seconds(ctx.planned_end - ctx.start));
        field(rec, "size_bytes", std::to_string(ctx.pkg.size_bytes));
    }

    // Receiver-side pipeline: verify, then compat, then the install matrix;
    // a data-install of a rebuildable package may schedule a self-build.
    void deliver(const std::string& device, const SignedPackage& pkg, const std::string& source) {
        DeviceRt& dr = devices_.at(device);

        if (!verify(pkg)) {
            TraceRecord& rec = log("verify_failed", now_);
            field(rec, "device", device);
            field(rec, "package_hash", pkg.content_hash.hex());
            return;
        }

        const CompatKind compat = check_compat(pkg, dr.st.platform, sc_.api_max_offset);
        InstallKind outcome;
        if (compat == CompatKind::Unsupported)
            outcome = InstallKind::Incompatible;
        else
            outcome = install(dr.st, pkg, now_, ++install_seq_, sc_.api_max_offset);

        TraceRecord& rec = log("install", now_);
        field(rec, "device", device);
        field(rec, "package", pkg.package_name);
        field(rec, "strain", pkg.embedded_genome ? pkg.embedded_genome->strain_id.hex() : "none");
        field(rec, "cert", pkg.cert.cert_id);
        field(rec, "compat", to_string(compat));
        field(rec, "outcome", to_string(outcome));
        field(rec, "source", source);

        if (outcome != InstallKind::Updated && outcome != InstallKind::SideBySide) return;

        if (pkg.embedded_genome) {
            const StrainId& strain = pkg.embedded_genome->strain_id;
            auto meta_it = strain_meta_.find(strain);
            if (meta_it != strain_meta_.end() && meta_it->second.origin_offline &&
                !meta_it->second.escaped && net_.uplink_check(dr.st.region)) {
                meta_it->second.escaped = true;
                TraceRecord& esc = log("escape", now_);
                field(esc, "strain", strain.hex());
                field(esc, "device", device);
                field(esc, "region", dr.st.region);
            }

            if (compat == CompatKind::NeedsRebuild && sc_.rebuild_on_receive &&
                !dr.pending_builds.count(strain)) {
                dr.pending_builds.insert(strain);
                schedule(now_, EvBuildStart{device, pkg.embedded_genome, pkg.cert, "rebuild"});
            }
        }
    }

    void on_sender_delivered(const std::string& sender) {
        if (sc_.mutation.policy != MutationConfig::Policy::every_k_transfers) return;
        DeviceRt& dr = devices_.at(sender);
        if (++dr.delivered_since_mutation < sc_.mutation.k) return;
        dr.delivered_since_mutation = 0;
        trigger_mutation(sender, "every_k_transfers");
    }

    void on_sender_blocked(const std::string& sender) {
        if (sc_.mutation.policy != MutationConfig::Policy::on_block) return;
        trigger_mutation(sender, "on_block");
    }

    void trigger_mutation(const std::string& device, const std::string& why) {
        DeviceRt& dr = devices_.at(device);
        if (dr.mutation_pending) return;
        const InstalledApp* app = latest_install(dr.st);
        if (!app || !app->pkg.embedded_genome) return;
        const Genome& parent = *app->pkg.embedded_genome;

        std::vector<MutationOp> ops;
        for (MutationOp::Kind kind : sc_.mutation.ops) {
            const std::string suffix = hex16(rng_mutation_.next_u64());
            switch (kind) {
                case MutationOp::Kind::RenameDisplay:
                    ops.push_back(MutationOp::rename_display("d" + suffix));
                    break;
                case MutationOp::Kind::RenamePackage:
                    ops.push_back(MutationOp::rename_package("p" + suffix));
                    break;
                case MutationOp::Kind::SwapIcon:
                    ops.push_back(MutationOp::swap_icon("i" + suffix));
                    break;
                case MutationOp::Kind::AddTrait:
                    ops.push_back(MutationOp::add_trait("t" + suffix));
                    break;
                default:
                    throw Error("mutation policy op not supported in scenarios");
            }
        }

        Genome child = mutate(parent, ops);
        auto child_ptr = std::make_shared<const Genome>(std::move(child));
        register_strain(*child_ptr, device, now_);

        TraceRecord& rec = log("mutation", now_);
        field(rec, "device", device);
        field(rec, "parent_strain", parent.strain_id.hex());
        field(rec, "strain", child_ptr->strain_id.hex());
        field(rec, "generation", std::to_string(child_ptr->generation));
        field(rec, "why", why);
        std::string joined;
        for (const auto& op : ops) {
            if (!joined.empty()) joined += ',';
            joined += describe(op);
        }
        field(rec, "ops", joined);

        dr.mutation_pending = true;
        dr.pending_builds.insert(child_ptr->strain_id);
        schedule(now_, EvBuildStart{device, child_ptr, app->pkg.cert, "mutation"});
    }

    void handle(const EvBuildStart& e) {
        DeviceRt& dr = devices_.at(e.device);
        if (dr.busy_until > now_) {  // one build at a time per device
            schedule(dr.busy_until, e);
            return;
        }

        thermal_update(dr.st, seconds_from_ms(now_ - dr.last_thermal));
        dr.last_thermal = now_;

        auto [pkg, report] =
            full_build(e.genome, dr.st.platform, e.cert, dr.cache, *dr.st.cls, dr.st.temperature,
                       sc_.base_package_bytes);
        const bool throttled =
            throttle_multiplier(dr.st.cls->thermal, dr.st.temperature) > 1.0;
        dr.busy_until = now_ + ms_from_seconds(report.total_seconds);

        TraceRecord& rec = log("build_start", now_);
        field(rec, "device", e.device);
        field(rec, "strain", e.genome->strain_id.hex());
        field(rec, "purpose", e.purpose);
        field(rec, "throttled", throttled ? "1" : "0");

        schedule(dr.busy_until, EvBuildEnd{e.device, std::move(pkg), std::move(report), e.purpose});
    }

    void handle(const EvBuildEnd& e) {
        DeviceRt& dr = devices_.at(e.device);
        dr.st.temperature += dr.st.cls->thermal.heat_per_build;
        dr.last_thermal = now_;

        TraceRecord& rec = log("build_end", now_);
        field(rec, "device", e.device);
        field(rec, "strain",
              e.pkg.embedded_genome ? e.pkg.embedded_genome->strain_id.hex() : "none");
        field(rec, "purpose", e.purpose);
        field(rec, "total_s", fmt_double(e.report.total_seconds));
        field(rec, "cache_hits", std::to_string(e.report.cache_hits));
        field(rec, "cache_misses", std::to_string(e.report.cache_misses));

        if (e.purpose == "mutation") dr.mutation_pending = false;
        if (e.pkg.embedded_genome) dr.pending_builds.erase(e.pkg.embedded_genome->strain_id);

        deliver(e.device, e.pkg, e.purpose == "origin" ? "origin" : "self_build");
    }

    void handle(const EvKillSwitch& e) {
        net_.kill_switch(e.region, e.up);
        TraceRecord& rec = log("kill_switch", now_);
        field(rec, "region", e.region);
        field(rec, "internet", e.up ? "up" : "down");
    }

    void handle(const EvMove& e) {
        DeviceRt& dr = devices_.at(e.device);
        net_.move_device(e.device, dr.st.region, e.region);
        dr.st.region = e.region;
        TraceRecord& rec = log("move", now_);
        field(rec, "device", e.device);
        field(rec, "region", e.region);
    }

    void handle(const EvCompromise& e) {
        DeviceRt& dr = devices_.at(e.device);
        TraceRecord& rec = log("compromise", now_);
        field(rec, "device", e.device);
        try {
            CompromiseRevealed revealed = adversary_.compromise(dr.st, now_);
            field(rec, "outcome", "ok");
            field(rec, "revealed", std::to_string(revealed.apps.size()));
            for (const auto& app : revealed.apps) {
                if (adversary_.config.blacklist_compromised_hashes &&
                    !adversary_.hash_blacklist.count(app.package_hash)) {
                    adversary_.blacklist_hash(app.package_hash, now_, "compromise");
                    TraceRecord& bl = log("blacklist_add", now_);
                    field(bl, "kind", "hash");
                    field(bl, "value", app.package_hash.hex());
                    if (app.strain) field(bl, "strain", app.strain->hex());
                    field(bl, "source", "compromise");
                }
                if (adversary_.config.blacklist_compromised_certs &&
                    !adversary_.cert_blacklist.count(app.cert_id)) {
                    adversary_.blacklist_cert(app.cert_id, now_, "compromise");
                    TraceRecord& bl = log("blacklist_add", now_);
                    field(bl, "kind", "cert");
                    field(bl, "value", app.cert_id);
                    field(bl, "source", "compromise");
                }
            }
        } catch (const BudgetExhausted&) {
            field(rec, "outcome", "budget_exhausted");
        }
    }

    void handle(const EvScriptedBuild& e) {
        DeviceRt& dr = devices_.at(e.device);
        const InstalledApp* app = latest_install(dr.st);
        if (!app || !app->pkg.embedded_genome) {
            TraceRecord& rec = log("build_skipped", now_);
            field(rec, "device", e.device);
            field(rec, "reason", "no_genome");
            return;
        }
        schedule(now_, EvBuildStart{e.device, app->pkg.embedded_genome, app->pkg.cert, "scripted"});
    }

    void handle(const EvUplinkProbe& e) {
        const DeviceRt& dr = devices_.at(e.device);
        TraceRecord& rec = log("uplink_probe", now_);
        field(rec, "device", e.device);
        field(rec, "region", dr.st.region);
        field(rec, "reachable", net_.uplink_check(dr.st.region) ? "1" : "0");
    }

    void handle(const EvReplay& e) {
        const CapturedTransfer* capture = adversary_.pick_replay(e.receiver, now_);
        TraceRecord& rec = log("adversary_replay", now_);
        field(rec, "receiver", e.receiver);
        if (!capture) {
            field(rec, "result", "no_capture");
            return;
        }
        field(rec, "package_hash", capture->pkg.content_hash.hex());
        field(rec, "result", "delivered");
        deliver(e.receiver, capture->pkg, "replay");
    }

    void handle(const EvBlacklistInitial&) {
        adversary_.blacklist_hash(initial_pkg_hash_, now_, "scripted");
        TraceRecord& rec = log("blacklist_add", now_);
        field(rec, "kind", "hash");
        field(rec, "value", initial_pkg_hash_.hex());
        field(rec, "strain", initial_genome_->strain_id.hex());
        field(rec, "source", "scripted");
    }

    // ---- helpers ---------------------------------------------------------

    void register_strain(const Genome& g, const std::string& birth_device, SimTime birth_time) {
        LineageNode node;
        node.parent = g.parent_strain;
        node.generation = g.generation;
        node.birth_time = birth_time;
        node.birth_device = birth_device;
        lineage_.insert(g.strain_id, std::move(node));
        const std::string& region = devices_.at(birth_device).st.region;
        strain_meta_.emplace(g.strain_id,
                             StrainMeta{region, !net_.uplink_check(region), false});
    }

    const std::string& device_class_name(const std::string& device) const {
        return devices_.at(device).st.cls->class_name;
    }

    void schedule(SimTime time, EventPayload payload) {
        queue_.push(QueuedEvent{time, ++event_seq_, std::move(payload)});
    }

    // The returned reference is valid only until the next log() call.
    TraceRecord& log(std::string kind, SimTime time) {
        TraceRecord rec;
        rec.time = time;
        rec.seq = ++record_seq_;
        rec.kind = std::move(kind);
        trace_.records.push_back(std::move(rec));
        return trace_.records.back();
    }

    static void field(TraceRecord& rec, std::string key, std::string value) {
        rec.fields.emplace_back(std::move(key), std::move(value));
    }

    static std::string hex16(std::uint64_t v) {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
        return buf;
    }

    void write_footer(SimTime end_time) {
        for (const auto& [id, dr] : devices_) {
            TraceRecord& rec = log("device_final", end_time);
            field(rec, "device", id);
            field(rec, "region", dr.st.region);
            field(rec, "installed", std::to_string(dr.st.installed.size()));
            field(rec, "temperature", fmt_double(dr.st.temperature));
            field(rec, "cache_hits", std::to_string(dr.cache.hits));
            field(rec, "cache_misses", std::to_string(dr.cache.misses));
            field(rec, "compromised", dr.st.compromised ? "1" : "0");
        }
        for (const auto& [id, node] : lineage_.nodes()) {
            TraceRecord& rec = log("lineage", end_time);
            field(rec, "strain", id.hex());
            field(rec, "parent", node.parent ? node.parent->hex() : "none");
            field(rec, "generation", std::to_string(node.generation));
            field(rec, "birth_s", fmt_seconds(node.birth_time));
            field(rec, "device", node.birth_device);
        }
        TraceRecord& rec = log("end", end_time);
        field(rec, "events", std::to_string(record_seq_));
    }

    // ---- state -----------------------------------------------------------

    const Scenario& sc_;
    RngRegistry rng_;
    RngStream rng_actions_;
    RngStream rng_observe_;
    RngStream rng_mutation_;
    std::map<std::string, RngStream> region_rngs_;

    std::map<std::string, std::shared_ptr<const DeviceClass>> classes_;
    std::map<std::string, DeviceRt> devices_;
    NetState net_;
    RateMatrix rates_;
    AdversaryState adversary_;
    Lineage lineage_;
    std::map<StrainId, StrainMeta> strain_meta_;

    std::shared_ptr<const Genome> initial_genome_;
    Certificate initial_cert_;
    ContentHash initial_pkg_hash_{};

    std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, QueuedEventAfter> queue_;
    std::map<std::uint64_t, TransferCtx> transfers_;
    SimTime now_ = 0;
    std::uint64_t event_seq_ = 0;
    std::uint64_t record_seq_ = 0;
    std::uint64_t transfer_seq_ = 0;
    std::uint64_t install_seq_ = 0;

    Trace trace_;
};

}  // namespace detail

// Executes one scenario under one seed. Identical inputs give byte-identical
// traces; the run is strictly single-threaded, but independent runs may be
// executed in parallel.
inline Trace run(const Scenario& scenario, std::uint64_t seed) {
    detail::Engine engine(scenario, seed);
    return engine.run();
}

}  // namespace strainsim
