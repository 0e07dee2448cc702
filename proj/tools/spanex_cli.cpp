#include <iostream>

#include "CLI11.hpp"
#include "spanex/harness.hpp"
#include "spanex/path_cover.hpp"

using namespace spanex;

namespace {

struct Common {
    std::string config;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string mode;
    std::string out;
};

ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
    if (c.seed_set) cfg.seed = c.seed;
    if (!c.mode.empty()) cfg.mode = c.mode;
    if (!c.out.empty()) cfg.out_dir = c.out;
    validate_config(cfg);
    return cfg;
}

void emit(const Common& c, const std::string& file, const ojson& j) {
    if (c.out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::filesystem::create_directories(c.out);
    auto path = std::filesystem::path(c.out) / file;
    std::ofstream(path) << j.dump(2) << '\n';
    std::cout << path.string() << '\n';
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "flat key = value config file");
    sub->add_option_function<uint64_t>(
        "--seed", [&c](const uint64_t& s) { c.seed = s, c.seed_set = true; }, "base seed");
    sub->add_option("--mode", c.mode, "strict or desk")->check(CLI::IsMember({"strict", "desk"}));
    sub->add_option("--out", c.out, "output directory");
}

int certify(const Common& c) {
    auto cfg = resolve(c);
    Graph g = generate_host(host_spec(cfg), derive_seed(cfg.seed, 1));
    ojson j;
    j["n"] = g.n();
    j["edges"] = g.edge_count();
    j["regular"] = g.is_regular();
    if (g.is_regular() && g.n() >= 2) {
        auto sp = second_eigenvalue(g);
        j["lambda"] = sp.lambda;
        auto cert = eigen_expander_certificate(g, sp);
        if (cert.ok()) {
            j["eigen"] = {{"kind", ExpanderCertificate::kind_name(cert.value().kind)},
                          {"d", cert.value().d1},
                          {"m", cert.value().m}};
        } else {
            j["eigen"] = {{"rejected", cert.error().reason}};
        }
    }
    double d = desk_expansion_degree(g, cfg.cert_trials, derive_seed(cfg.seed, 3));
    j["sampled"] = {{"kind", "sampled-only"}, {"d", d}, {"trials", cfg.cert_trials}};
    emit(c, "certificate.json", j);
    return 0;
}

int decompose(const Common& c) {
    auto cfg = resolve(c);
    int n = cfg.host_n;
    Tree t = generate_tree(cfg, n, derive_seed(cfg.seed, 2));
    ojson j;
    j["n"] = t.n();
    j["delta"] = t.max_degree();
    auto dec = decompose_levels(t, cfg.h);
    j["level_sizes"] = dec.sizes;
    auto th = dec.levels.back();
    if (th.n() >= 3) {
        auto lb = leaf_or_barepath(th, cfg.k);
        j["leaf_or_barepath"] = {{"branch", branch_name(lb.branch)},
                                 {"payload", lb.payload_size()},
                                 {"threshold", lb.threshold}};
    }
    auto sc = star_or_caterpillar(t, cfg.k2);
    j["star_or_caterpillar"] = {{"branch", branch_name(sc.branch)},
                                {"payload", sc.payload_size()},
                                {"threshold", sc.threshold}};
    try {
        auto plan = plan_embedding(t, params_for(cfg, n, cfg.d > 0 ? cfg.d : n / 20.0,
                                                 std::max(2, t.max_degree())),
                                   cfg.seed);
        j["case"] = case_name(plan.tag);
        j["part_sizes"] = plan.part_sizes;
        j["size_formula"] = plan.size_formula;
    } catch (const Error& e) {
        j["case_error"] = e.what();
    }
    emit(c, "decomposition.json", j);
    return 0;
}

int embed(const Common& c) {
    auto cfg = resolve(c);
    Graph g = generate_host(host_spec(cfg), derive_seed(cfg.seed, 1));
    Tree t = generate_tree(cfg, g.n(), derive_seed(cfg.seed, 2));
    double d = cfg.d > 0 ? cfg.d : desk_expansion_degree(g, cfg.cert_trials, derive_seed(cfg.seed, 3));
    auto p = params_for(cfg, g.n(), d, std::max(2, t.max_degree()));
    try {
        auto res = embed_spanning_tree(g, t, p, cfg.seed);
        emit(c, "embedding.json", embedding_json(res, cfg.seed, cfg.timing));
        return res.verified ? 0 : 1;
    } catch (const StageFailure& e) {
        std::cerr << "failed at " << e.stage() << ": " << e.what() << '\n';
    } catch (const PreconditionViolated& e) {
        std::cerr << e.what() << '\n';
    }
    return 2;
}

int cover(const Common& c, int pairs, int ell) {
    auto cfg = resolve(c);
    Graph g = generate_host(host_spec(cfg), derive_seed(cfg.seed, 1));
    int need = pairs * ell;
    if (need != g.n()) {
        std::cerr << "cover needs pairs * ell = n (" << need << " != " << g.n() << ")\n";
        return 2;
    }
    std::vector<int> order(g.n());
    for (int v = 0; v < g.n(); ++v) order[v] = v;
    Rng rng(derive_seed(cfg.seed, 5));
    shuffle_in_place(order, rng);
    std::vector<std::pair<int, int>> ps;
    Bitset w(g.n());
    w.set_all();
    for (int i = 0; i < pairs; ++i) {
        ps.emplace_back(order[2 * i], order[2 * i + 1]);
        w.reset(order[2 * i]);
        w.reset(order[2 * i + 1]);
    }
    PathCoverOptions opt;
    opt.seed = cfg.seed;
    opt.strict = cfg.mode == "strict";
    try {
        auto res = path_cover(g, VertexSet(w), ps, ell, opt);
        ojson j;
        j["pairs"] = ps;
        j["paths"] = res.paths;
        j["r"] = res.r;
        j["s"] = res.s;
        j["absorber_route"] = res.absorber_route;
        j["completion_route"] = res.completion_route;
        j["verified"] = verify_path_cover(g, VertexSet(w), ps, ell, res.paths).ok;
        emit(c, "cover.json", j);
        return j["verified"].get<bool>() ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
}

int experiment(const Common& c) {
    auto cfg = resolve(c);
    auto rep = run_experiment(cfg);
    auto [csv, js] = write_reports(rep);
    std::cout << csv << '\n' << js << '\n';
    std::cout << "success " << rep.successes() << "/" << rep.records.size() << '\n';
    return rep.all_verified() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spanning tree embedding in expanders"};
    app.require_subcommand(1);
    Common c;
    int pairs = 10, ell = 10;
    auto* s_cert = app.add_subcommand("certify", "certify the host's expansion");
    auto* s_dec = app.add_subcommand("decompose", "level decomposition and case dispatch of a tree");
    auto* s_emb = app.add_subcommand("embed", "embed one spanning tree and write its JSON");
    auto* s_cov = app.add_subcommand("cover", "exact-length path cover of random pairs");
    auto* s_exp = app.add_subcommand("experiment", "batch trials with CSV and JSON reports");
    for (auto* s : {s_cert, s_dec, s_emb, s_cov, s_exp}) add_common(s, c);
    s_cov->add_option("--pairs", pairs, "number of pairs");
    s_cov->add_option("--ell", ell, "vertices per path");
    CLI11_PARSE(app, argc, argv);
    try {
        if (*s_cert) return certify(c);
        if (*s_dec) return decompose(c);
        if (*s_emb) return embed(c);
        if (*s_cov) return cover(c, pairs, ell);
        if (*s_exp) return experiment(c);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    return 0;
}
