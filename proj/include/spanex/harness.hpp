#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "spanex/common.hpp"
#include "spanex/generators.hpp"
#include "spanex/pipeline.hpp"

namespace spanex {

using ojson = nlohmann::ordered_json;

// Flat key = value configuration. Every key has a default; unknown keys are
// rejected so typos do not silently fall back.
struct ExperimentConfig {
    std::string host = "gnp";  // gnp | regular | file
    int host_n = 300;
    int host_d = 0;            // regular degree
    double host_p = 0.5;
    std::string host_file;
    std::string tree = "random";  // random | file | path | star | caterpillar | binary | spine_stars
    int tree_delta = 3;
    double tree_locality = 0;
    int tree_legs = 1;
    std::string tree_file;
    int trials = 10;
    uint64_t seed = 1;
    std::string mode = "desk";     // desk | strict
    std::string theorem = "th1";   // th1 | th2
    double d = 0;                  // 0: pick per host with the sampled falsifier
    int h = 3, k = 18, k2 = 12;
    double slack_fraction = 0.25;
    int cert_trials = 200;
    int attempts = 6;
    int threads = 1;
    bool timing = false;  // wall-clock millis in reports; off keeps reports byte-identical
    std::string out_dir = ".";
    std::string name = "experiment";

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
    std::istringstream is(v);
    T x;
    if (!(is >> x) || !is.eof()) throw InvalidSpec("bad value for " + key + ": '" + v + "'");
    return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidSpec("bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

inline std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
    using detail::fmt_double;
    return {
        {"host", c.host},
        {"host_n", std::to_string(c.host_n)},
        {"host_d", std::to_string(c.host_d)},
        {"host_p", fmt_double(c.host_p)},
        {"host_file", c.host_file},
        {"tree", c.tree},
        {"tree_delta", std::to_string(c.tree_delta)},
        {"tree_locality", fmt_double(c.tree_locality)},
        {"tree_legs", std::to_string(c.tree_legs)},
        {"tree_file", c.tree_file},
        {"trials", std::to_string(c.trials)},
        {"seed", std::to_string(c.seed)},
        {"mode", c.mode},
        {"theorem", c.theorem},
        {"d", fmt_double(c.d)},
        {"h", std::to_string(c.h)},
        {"k", std::to_string(c.k)},
        {"k2", std::to_string(c.k2)},
        {"slack_fraction", fmt_double(c.slack_fraction)},
        {"cert_trials", std::to_string(c.cert_trials)},
        {"attempts", std::to_string(c.attempts)},
        {"threads", std::to_string(c.threads)},
        {"timing", c.timing ? "true" : "false"},
        {"out_dir", c.out_dir},
        {"name", c.name},
    };
}

inline std::string write_config(const ExperimentConfig& c) {
    std::string out;
    for (const auto& [k, v] : config_entries(c)) out += k + " = " + v + "\n";
    return out;
}

inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& v) {
    using detail::parse_number;
    if (key == "host") c.host = v;
    else if (key == "host_n") c.host_n = parse_number<int>(key, v);
    else if (key == "host_d") c.host_d = parse_number<int>(key, v);
    else if (key == "host_p") c.host_p = parse_number<double>(key, v);
    else if (key == "host_file") c.host_file = v;
    else if (key == "tree") c.tree = v;
    else if (key == "tree_delta") c.tree_delta = parse_number<int>(key, v);
    else if (key == "tree_locality") c.tree_locality = parse_number<double>(key, v);
    else if (key == "tree_legs") c.tree_legs = parse_number<int>(key, v);
    else if (key == "tree_file") c.tree_file = v;
    else if (key == "trials") c.trials = parse_number<int>(key, v);
    else if (key == "seed") c.seed = parse_number<uint64_t>(key, v);
    else if (key == "mode") c.mode = v;
    else if (key == "theorem") c.theorem = v;
    else if (key == "d") c.d = parse_number<double>(key, v);
    else if (key == "h") c.h = parse_number<int>(key, v);
    else if (key == "k") c.k = parse_number<int>(key, v);
    else if (key == "k2") c.k2 = parse_number<int>(key, v);
    else if (key == "slack_fraction") c.slack_fraction = parse_number<double>(key, v);
    else if (key == "cert_trials") c.cert_trials = parse_number<int>(key, v);
    else if (key == "attempts") c.attempts = parse_number<int>(key, v);
    else if (key == "threads") c.threads = parse_number<int>(key, v);
    else if (key == "timing") c.timing = detail::parse_bool(key, v);
    else if (key == "out_dir") c.out_dir = v;
    else if (key == "name") c.name = v;
    else throw InvalidSpec("unknown config key '" + key + "'");
}

inline void validate_config(const ExperimentConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw InvalidSpec(msg);
    };
    need(c.host == "gnp" || c.host == "regular" || c.host == "file", "host must be gnp, regular or file");
    need(c.tree == "random" || c.tree == "file" || c.tree == "path" || c.tree == "star" ||
             c.tree == "caterpillar" || c.tree == "binary" || c.tree == "spine_stars",
         "unknown tree family '" + c.tree + "'");
    need(c.mode == "desk" || c.mode == "strict", "mode must be desk or strict");
    need(c.theorem == "th1" || c.theorem == "th2", "theorem must be th1 or th2");
    need(c.trials >= 0, "trials must be >= 0");
    need(c.host == "file" || c.host_n >= 1, "host_n must be >= 1");
    need(c.threads >= 1, "threads must be >= 1");
    need(c.tree_delta >= 2, "tree_delta must be >= 2");
    need(c.d >= 0, "d must be >= 0");
}

// '#' starts a comment; blank lines are skipped.
inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidSpec("line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    validate_config(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------------------

struct HostSpec {
    std::string kind = "gnp";
    int n = 0;
    int d = 0;
    double p = 0.5;
    std::string file;
};

inline HostSpec host_spec(const ExperimentConfig& c) { return {c.host, c.host_n, c.host_d, c.host_p, c.host_file}; }

inline Graph generate_host(const HostSpec& spec, uint64_t seed) {
    if (spec.kind == "regular") {
        if (spec.n < 1 || spec.d < 0 || spec.d >= spec.n) throw InvalidSpec("need 0 <= d < n");
        if ((static_cast<int64_t>(spec.n) * spec.d) % 2) throw InvalidSpec("n*d must be even");
        return random_regular(spec.n, spec.d, seed);
    }
    if (spec.kind == "gnp") return random_gnp(spec.n, spec.p, seed);
    if (spec.kind == "file") {
        std::ifstream in(spec.file);
        if (!in) throw InvalidSpec("cannot open host file " + spec.file);
        return read_edge_list(in);
    }
    throw InvalidSpec("unknown host kind '" + spec.kind + "'");
}

inline Tree generate_tree(const ExperimentConfig& c, int n, uint64_t seed) {
    if (c.tree == "random") return random_bounded_tree(n, c.tree_delta, seed, c.tree_locality);
    if (c.tree == "path") return tree_families::path(n);
    if (c.tree == "star") return tree_families::star(n - 1);
    std::vector<std::pair<int, int>> e;
    if (c.tree == "binary") {
        for (int v = 1; v < n; ++v) e.emplace_back((v - 1) / 2, v);
        return Tree(n, e);
    }
    if (c.tree == "caterpillar") {
        // spine first, then legs dealt round-robin over the spine
        int spine = std::max(1, (n + c.tree_legs) / (1 + c.tree_legs));
        for (int v = 0; v + 1 < spine; ++v) e.emplace_back(v, v + 1);
        for (int v = spine; v < n; ++v) e.emplace_back((v - spine) % spine, v);
        return Tree(n, e);
    }
    if (c.tree == "spine_stars") {
        // spine vertices each carry a 3-vertex pendant star; remainder extends the spine
        int groups = n / 4;
        int spine = n - 3 * groups;
        for (int v = 0; v + 1 < spine; ++v) e.emplace_back(v, v + 1);
        for (int i = 0; i < groups; ++i) {
            int c0 = spine + 3 * i;
            e.emplace_back(i, c0);
            e.emplace_back(c0, c0 + 1);
            e.emplace_back(c0, c0 + 2);
        }
        return Tree(n, e);
    }
    if (c.tree == "file") {
        std::ifstream in(c.tree_file);
        if (!in) throw InvalidSpec("cannot open tree file " + c.tree_file);
        return read_tree(in);
    }
    throw InvalidSpec("unknown tree family '" + c.tree + "'");
}

inline PipelineParams params_for(const ExperimentConfig& c, int n, double d, int delta) {
    Theorem th = c.theorem == "th2" ? Theorem::Th2 : Theorem::Th1;
    PipelineParams p = c.mode == "strict" ? PipelineParams::strict_scale(n, d, delta, th)
                                          : PipelineParams::desk(n, d, delta, th);
    if (c.mode != "strict") {
        p.h = c.h;
        p.k = c.k;
        p.k2 = c.k2;
        p.slack_fraction = c.slack_fraction;
    }
    p.cert_trials = c.cert_trials;
    p.attempts = c.attempts;
    return p;
}

// ---------------------------------------------------------------------------

struct TrialRecord {
    int trial = 0;
    uint64_t seed = 0;
    std::string case_tag = "-";
    int n = 0;
    double d = 0;
    int delta = 0;
    bool success = false;
    bool verified = false;
    long millis = 0;
    std::string stage;    // where a failed run stopped
    std::string message;
    std::string refusal;  // first failing inequality in strict mode
    int attempts = 0;
    std::vector<PhaseRecord> phases;
    std::vector<std::string> certificates;
    std::vector<std::string> warnings;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<TrialRecord> records;

    int successes() const {
        int s = 0;
        for (const auto& r : records) s += r.success;
        return s;
    }
    double success_rate() const { return records.empty() ? 0 : double(successes()) / records.size(); }
    // every reported success passed the spanning verifier
    bool all_verified() const {
        for (const auto& r : records)
            if (r.success && !r.verified) return false;
        return true;
    }
    std::map<std::string, int> case_histogram() const {
        std::map<std::string, int> h;
        for (const auto& r : records) ++h[r.case_tag];
        return h;
    }
};

inline TrialRecord run_trial(const ExperimentConfig& c, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = derive_seed(c.seed, trial);
    auto t0 = std::chrono::steady_clock::now();
    Graph g = generate_host(host_spec(c), derive_seed(rec.seed, 1));
    Tree t = generate_tree(c, g.n(), derive_seed(rec.seed, 2));
    rec.n = g.n();
    rec.delta = std::max(2, t.max_degree());
    rec.d = c.d > 0 ? c.d : desk_expansion_degree(g, c.cert_trials, derive_seed(rec.seed, 3));
    PipelineParams p = params_for(c, g.n(), rec.d, rec.delta);
    if (p.strict) {
        if (auto q = strict_refusal(p)) {
            rec.case_tag = "REFUSED";
            rec.stage = "Strict";
            rec.refusal = q->name;
            rec.message = describe(*q);
        }
    }
    if (rec.refusal.empty()) {
        try {
            auto res = embed_spanning_tree(g, t, p, derive_seed(rec.seed, 4));
            rec.case_tag = case_name(res.plan.tag);
            rec.verified = verify_embedding(g, t, res.embedding, true).ok;
            rec.success = res.verified && rec.verified;
            rec.attempts = res.attempts;
            rec.phases = res.phases;
            rec.certificates = res.certificate_kinds;
            rec.warnings = res.warnings;
        } catch (const StageFailure& e) {
            rec.stage = e.stage();
            rec.case_tag = e.stage().substr(0, e.stage().find('/'));
            rec.message = e.what();
        } catch (const Error& e) {
            rec.stage = e.kind();
            rec.message = e.what();
        }
    }
    if (c.timing)
        rec.millis = static_cast<long>(std::chrono::duration<double, std::milli>(
                                           std::chrono::steady_clock::now() - t0)
                                           .count());
    if (!c.timing)
        for (auto& ph : rec.phases) ph.millis = 0;
    return rec;
}

// Trials run on a worker pool and land in trial-index order.
inline RunReport run_experiment(const ExperimentConfig& c) {
    validate_config(c);
    RunReport rep;
    rep.config = c;
    rep.records.resize(c.trials);
    std::atomic<int> next{0};
    std::vector<std::string> errors(c.trials);
    auto worker = [&] {
        for (int i = next++; i < c.trials; i = next++) {
            try {
                rep.records[i] = run_trial(c, i);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    int nt = std::max(1, std::min(c.threads, c.trials));
    std::vector<std::thread> pool;
    for (int i = 1; i < nt; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (int i = 0; i < c.trials; ++i)
        if (!errors[i].empty()) throw InvalidSpec("trial " + std::to_string(i) + ": " + errors[i]);
    return rep;
}

inline std::string report_csv(const RunReport& rep) {
    std::ostringstream os;
    os << "trial,seed,case,n,d,delta,success,verified,millis\n";
    for (const auto& r : rep.records) {
        char d[32];
        std::snprintf(d, sizeof d, "%.6f", r.d);
        os << r.trial << ',' << r.seed << ',' << r.case_tag << ',' << r.n << ',' << d << ','
           << r.delta << ',' << (r.success ? 1 : 0) << ',' << (r.verified ? 1 : 0) << ','
           << r.millis << '\n';
    }
    return os.str();
}

inline ojson phases_json(const std::vector<PhaseRecord>& phases, bool timing) {
    ojson arr = ojson::array();
    for (const auto& ph : phases) {
        ojson o;
        o["name"] = ph.name;
        o["detail"] = ph.detail;
        o["millis"] = timing ? static_cast<long>(ph.millis) : 0L;
        arr.push_back(o);
    }
    return arr;
}

inline ojson report_json(const RunReport& rep) {
    ojson j;
    ojson cfg;
    for (const auto& [k, v] : config_entries(rep.config)) cfg[k] = v;
    j["config"] = cfg;
    j["trials"] = rep.records.size();
    j["successes"] = rep.successes();
    j["success_rate"] = rep.success_rate();
    j["all_verified"] = rep.all_verified();
    ojson hist;
    for (const auto& [k, v] : rep.case_histogram()) hist[k] = v;
    j["cases"] = hist;
    std::map<std::string, int> fails, refusals;
    for (const auto& r : rep.records) {
        if (!r.success && !r.stage.empty() && r.refusal.empty()) ++fails[r.stage];
        if (!r.refusal.empty()) ++refusals[r.refusal];
    }
    j["failures"] = ojson(fails);
    j["refusals"] = ojson(refusals);
    ojson recs = ojson::array();
    for (const auto& r : rep.records) {
        ojson o;
        o["trial"] = r.trial;
        o["seed"] = r.seed;
        o["case"] = r.case_tag;
        o["success"] = r.success;
        o["verified"] = r.verified;
        o["attempts"] = r.attempts;
        o["stage"] = r.stage;
        o["message"] = r.message;
        o["refusal"] = r.refusal;
        o["certificates"] = r.certificates;
        o["warnings"] = r.warnings;
        o["phases"] = phases_json(r.phases, rep.config.timing);
        recs.push_back(o);
    }
    j["records"] = recs;
    return j;
}

// Writes <out_dir>/<name>.csv and <out_dir>/<name>.json; returns the paths.
inline std::pair<std::string, std::string> write_reports(const RunReport& rep) {
    namespace fs = std::filesystem;
    fs::create_directories(rep.config.out_dir);
    fs::path base = fs::path(rep.config.out_dir) / rep.config.name;
    std::string csv = base.string() + ".csv", js = base.string() + ".json";
    std::ofstream(csv) << report_csv(rep);
    std::ofstream(js) << report_json(rep).dump(2) << '\n';
    return {csv, js};
}

inline ojson embedding_json(const PipelineResult& res, uint64_t seed, bool timing) {
    ojson j;
    j["case"] = case_name(res.plan.tag);
    j["seed"] = seed;
    j["phases"] = phases_json(res.phases, timing);
    j["map"] = res.embedding.map;
    j["verified"] = res.verified;
    return j;
}

}  // namespace spanex
