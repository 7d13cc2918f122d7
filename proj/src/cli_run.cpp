#include "kms/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>

#include "kms/graph_algo.hpp"
#include "kms/harmonic.hpp"
#include "kms/martin.hpp"
#include "kms/parse.hpp"
#include "kms/selfcheck.hpp"
#include "kms/series.hpp"
#include "kms/solve.hpp"

namespace kms::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

struct CommonArgs {
    std::string graph_file;
    std::string gen_spec;
    std::string mode_override;  // "", "exact", "float"
    std::string format = "json";
    std::size_t depth = 256;
    std::size_t row_limit = 64;
    double tol = 1e-10;
    std::uint64_t seed = 0;
    std::size_t window_radius = 10;
    std::string base_token;
    std::optional<double> tail_ratio;
    bool no_closed_forms = false;

    TruncationConfig cfg() const {
        TruncationConfig c;
        c.depth = depth;
        c.row_limit = row_limit;
        c.tol = tol;
        c.tail_ratio_bound = tail_ratio;
        c.use_closed_forms = !no_closed_forms;
        return c;
    }
};

void add_common(CLI::App* cmd, CommonArgs& a) {
    auto* gf = cmd->add_option("--graph", a.graph_file, "graph document file");
    auto* gs = cmd->add_option("--gen", a.gen_spec, "generator spec, e.g. 'loop a=2'");
    gf->excludes(gs);
    gs->excludes(gf);
    cmd->add_option("--mode", a.mode_override, "arithmetic mode override")
        ->check(CLI::IsMember({"exact", "float"}));
    cmd->add_option("--format", a.format, "output format")
        ->check(CLI::IsMember({"json", "tsv"}));
    cmd->add_option("--depth", a.depth, "series truncation depth");
    cmd->add_option("--row-limit", a.row_limit, "entries enumerated per emitter row");
    cmd->add_option("--tol", a.tol, "numeric tolerance");
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--window", a.window_radius, "probe window radius around the base vertex");
    cmd->add_option("--base", a.base_token, "base vertex of the probe window");
    cmd->add_option("--tail-ratio", a.tail_ratio,
                    "geometric tail ratio certificate (0 < rho < 1)");
    cmd->add_flag("--no-closed-forms", a.no_closed_forms,
                  "ignore closed forms registered by generator families");
}

GraphSource load_graph(const CommonArgs& a) {
    if (a.graph_file.empty() && a.gen_spec.empty())
        throw std::invalid_argument("a graph source is required (--graph FILE or --gen SPEC)");
    GraphSource g = !a.graph_file.empty() ? load_graph_file(a.graph_file)
                                          : parse_generator_spec(a.gen_spec);
    if (a.mode_override.empty()) return g;
    return g.with_mode(a.mode_override == "exact" ? ArithmeticMode::Exact
                                                  : ArithmeticMode::Float);
}

std::vector<VertexId> resolve_window(const GraphSource& g, const CommonArgs& a,
                                     const std::optional<VertexId>& preferred_base) {
    if (g.is_finite()) return g.finite().vertices();
    VertexId base = !a.base_token.empty() ? VertexId(a.base_token)
                    : preferred_base      ? *preferred_base
                                          : g.generator().metadata().start;
    return probe_window(g, base, a.window_radius, a.cfg());
}

std::string mode_name(ArithmeticMode m) {
    return m == ArithmeticMode::Exact ? "exact" : "float";
}

json num_json(double v) {
    json o;
    o["value"] = v;
    o["exact"] = nullptr;
    return o;
}

json num_json(const Rational& v) {
    json o;
    o["value"] = num::to_double(v);
    o["exact"] = rational_to_string(v);
    return o;
}

template <typename T>
json vector_json(const std::map<VertexId, T>& values) {
    json arr = json::array();
    for (const auto& [v, val] : values) {
        json item;
        item["vertex"] = v.token;
        item["value"] = num::to_double(val);
        if constexpr (num::is_exact_v<T>)
            item["exact"] = rational_to_string(val);
        else
            item["exact"] = nullptr;
        arr.push_back(item);
    }
    return arr;
}

template <typename T>
std::string vector_tsv(const std::map<VertexId, T>& values) {
    std::ostringstream os;
    os << "vertex\tvalue\n";
    for (const auto& [v, val] : values) {
        if constexpr (num::is_exact_v<T>)
            os << v.token << "\t" << rational_to_string(val) << "\n";
        else
            os << v.token << "\t" << num::to_display(val) << "\n";
    }
    return os.str();
}

json diagnostics_json(const CommonArgs& a, ArithmeticMode mode) {
    json d;
    d["depth"] = a.depth;
    d["row_limit"] = a.row_limit;
    d["tol"] = a.tol;
    d["mode"] = mode_name(mode);
    d["closed_forms"] = !a.no_closed_forms;
    return d;
}

struct DocumentBuilder {
    json doc;
    std::string tsv;
    std::string format;

    DocumentBuilder(const std::string& command, const CommonArgs& a, ArithmeticMode mode)
        : format(a.format) {
        doc["schema_version"] = kSchemaVersion;
        doc["command"] = command;
        doc["diagnostics"] = diagnostics_json(a, mode);
    }

    std::string render() const {
        if (format == "tsv" && !tsv.empty()) return tsv;
        return doc.dump(2) + "\n";
    }
};

Rational parse_lambda(const std::string& text) {
    Rational r = parse_rational(text);
    if (r <= 0) throw std::invalid_argument("lambda must be > 0");
    return r;
}

template <typename T>
std::map<VertexId, T> convert_vector(const std::map<VertexId, Rational>& m) {
    std::map<VertexId, T> out;
    for (const auto& [v, val] : m) out.emplace(v, num::from_rational<T>(val));
    return out;
}

json beta0_json(const Beta0Report& rep) {
    json r;
    r["lambda0_lower"] = rep.lambda0_lower;
    r["lambda0_upper"] = rep.lambda0_upper ? json(*rep.lambda0_upper) : json(nullptr);
    r["lambda0_exact"] =
        rep.lambda0_exact ? json(rational_to_string(*rep.lambda0_exact)) : json(nullptr);
    r["certainty"] = rep.exact ? "exact" : "lower-bound";
    r["witness_vertex"] = rep.witness.token;
    r["method"] = rep.method;
    return r;
}

int cmd_analyze(const CommonArgs& a, std::string& out) {
    GraphSource g = load_graph(a);
    DocumentBuilder doc("analyze", a, g.mode());
    auto rep = classify_vertices(g, a.row_limit);
    json r;
    r["source"] = g.describe();
    r["cofinal"] = to_string(rep.cofinal);
    r["no_sinks"] = to_string(rep.no_sinks);
    r["powers_finite"] = to_string(rep.powers_finite);
    json sinks = json::array();
    for (const auto& s : rep.sinks) sinks.push_back(s.token);
    r["sinks"] = sinks;
    json emitters = json::array();
    for (const auto& e : rep.infinite_emitters) emitters.push_back(e.token);
    r["infinite_emitters"] = emitters;
    r["notes"] = rep.notes;
    bool have_nw = false;
    if (g.is_finite()) {
        auto nwres = nonwandering_set(g.finite());
        have_nw = !nwres.nw.empty();
        r["nw_size"] = nwres.nw.size();
        r["nw_strongly_connected"] = nwres.strongly_connected;
        json nw = json::array();
        for (const auto& v : nwres.nw) nw.push_back(v.token);
        r["nw"] = nw;
    } else {
        const auto& meta = g.generator().metadata();
        have_nw = meta.nw_kind != NWKind::Empty;
        r["nw_kind"] = meta.nw_kind == NWKind::Empty    ? "empty"
                       : meta.nw_kind == NWKind::Finite ? "finite"
                                                        : "infinite";
        r["nw_declared"] = true;
    }
    if (have_nw) {
        auto b0 = beta0_estimate(g, a.cfg());
        r["beta0"] = beta0_json(b0);
        auto rec = classify_recurrence(g, a.cfg());
        json rc;
        rc["verdict"] = to_string(rec.verdict);
        rc["partial_sum"] = rec.partial_sum;
        rc["evidence"] = rec.evidence;
        r["recurrence"] = rc;
    } else {
        r["beta0"] = nullptr;
        json rc;
        rc["verdict"] = "transient";
        rc["evidence"] = "empty non-wandering set: the series converge for every lambda";
        r["recurrence"] = rc;
    }
    doc.doc["result"] = r;
    out = doc.render();
    return rep.notes.empty() ? 0 : 1;
}

int cmd_beta0(const CommonArgs& a, std::string& out) {
    GraphSource g = load_graph(a);
    DocumentBuilder doc("beta0", a, g.mode());
    auto rep = beta0_estimate(g, a.cfg());
    doc.doc["result"] = beta0_json(rep);
    if (a.format == "tsv") {
        std::ostringstream os;
        os << "lambda0_lower\tlambda0_upper\tcertainty\n" << rep.lambda0_lower << "\t";
        if (rep.lambda0_upper) os << *rep.lambda0_upper;
        os << "\t" << (rep.exact ? "exact" : "lower-bound") << "\n";
        doc.tsv = os.str();
    }
    out = doc.render();
    return 0;
}

int cmd_classify(const CommonArgs& a, std::string& out) {
    GraphSource g = load_graph(a);
    DocumentBuilder doc("classify", a, g.mode());
    auto rep = classify_recurrence(g, a.cfg());
    json r;
    r["verdict"] = to_string(rep.verdict);
    r["partial_sum"] = rep.partial_sum;
    r["evidence"] = rep.evidence;
    r["certainty"] = rep.verdict == Recurrence::Unknown ? "heuristic" : "exact";
    doc.doc["result"] = r;
    out = doc.render();
    return 0;
}

template <typename T>
json series_json(const SeriesEstimate<T>& est) {
    json r;
    r["lower"] = num_json(est.lower);
    r["upper"] = est.upper ? num_json(*est.upper) : json(nullptr);
    r["converged"] = est.converged;
    r["diverged"] = est.diverged;
    r["rows_truncated"] = est.rows_truncated;
    r["certainty"] = est.upper ? "bracketed" : "lower-bound";
    json terms = json::array();
    for (const auto& t : est.partial_terms) terms.push_back(num::to_double(t));
    r["partial_terms"] = terms;
    return r;
}

template <typename T>
int cmd_green_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                const VertexId& v, const VertexId& w, std::string& out) {
    DocumentBuilder doc("green", a, g.mode());
    auto est = green_series<T>(g, v, w, num::from_rational<T>(lambda), a.cfg());
    json r = series_json(est);
    r["v"] = v.token;
    r["w"] = w.token;
    doc.doc["result"] = r;
    if (a.format == "tsv") {
        std::ostringstream os;
        os << "v\tw\tlower\tupper\tconverged\tdiverged\n"
           << v.token << "\t" << w.token << "\t" << num::to_double(est.lower) << "\t";
        if (est.upper) os << num::to_double(*est.upper);
        os << "\t" << (est.converged ? 1 : 0) << "\t" << (est.diverged ? 1 : 0) << "\n";
        doc.tsv = os.str();
    }
    out = doc.render();
    return est.diverged ? 1 : 0;
}

template <typename T>
int cmd_solve_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                const VertexId& v0, std::string& out) {
    DocumentBuilder doc("solve", a, g.mode());
    auto cone = solve_finite<T>(g, num::from_rational<T>(lambda), v0, a.cfg());
    json r;
    r["base_vertex"] = v0.token;
    r["lambda"] = num_json(num::from_rational<T>(lambda));
    r["extreme_point_count"] = cone.extreme_points.size();
    r["certainty"] = num::is_exact_v<T> ? "exact" : "heuristic";
    json pts = json::array();
    for (const auto& pt : cone.extreme_points) {
        json p;
        p["label"] = pt.label;
        p["values"] = vector_json(pt.values);
        pts.push_back(p);
    }
    r["extreme_points"] = pts;
    r["notes"] = cone.notes;
    doc.doc["result"] = r;
    if (a.format == "tsv") {
        std::ostringstream os;
        os << "point\tlabel\tvertex\tvalue\n";
        for (std::size_t i = 0; i < cone.extreme_points.size(); ++i) {
            for (const auto& [v, val] : cone.extreme_points[i].values) {
                os << i << "\t" << cone.extreme_points[i].label << "\t" << v.token << "\t"
                   << num::to_display(val) << "\n";
            }
        }
        doc.tsv = os.str();
    }
    out = doc.render();
    return cone.extreme_points.empty() ? 1 : 0;
}

template <typename T>
int cmd_certify_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                  std::string& out) {
    DocumentBuilder doc("certify", a, g.mode());
    auto cert = certify_no_solution<T>(g, num::from_rational<T>(lambda), a.cfg());
    json r;
    if (cert) {
        r["status"] = "no-solution";
        r["witness_vertex"] = cert->witness.token;
        r["exponent"] = cert->exponent;
        r["value"] = cert->value;
        r["lambda"] = cert->lambda;
    } else {
        r["status"] = "unknown";
    }
    doc.doc["result"] = r;
    out = doc.render();
    return 0;
}

template <typename T>
int cmd_extend_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                 const std::map<VertexId, Rational>& eta_r, std::string& out) {
    DocumentBuilder doc("extend", a, g.mode());
    auto eta = convert_vector<T>(eta_r);
    std::set<VertexId> hereditary;
    for (const auto& [v, _] : eta) hereditary.insert(v);
    T lam = num::from_rational<T>(lambda);
    HarmonicVector<T> ext =
        g.is_finite() ? extend_from_hereditary<T>(g, lam, hereditary, eta, a.cfg())
                      : extend_from_hereditary<T>(g, lam, hereditary, eta,
                                                  resolve_window(g, a, std::nullopt), a.cfg());
    json r;
    r["lambda"] = num_json(lam);
    r["kind"] = to_string(ext.kind);
    r["values"] = vector_json(ext.values);
    doc.doc["result"] = r;
    if (a.format == "tsv") doc.tsv = vector_tsv(ext.values);
    out = doc.render();
    return 0;
}

template <typename T>
int cmd_riesz_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                const std::map<VertexId, Rational>& psi_r, std::string& out) {
    DocumentBuilder doc("riesz", a, g.mode());
    auto psi = convert_vector<T>(psi_r);
    std::vector<VertexId> window;
    if (g.is_finite()) {
        window = g.finite().vertices();
    } else {
        for (const auto& [v, _] : psi) window.push_back(v);
    }
    auto pair = riesz_decompose<T>(g, num::from_rational<T>(lambda), psi, window, a.cfg());
    json r;
    r["lambda"] = num_json(pair.lambda);
    r["phi"] = vector_json(pair.phi.values);
    r["charge"] = vector_json(pair.charge);
    r["reconstruction_residual"] = pair.reconstruction_residual;
    r["iterations"] = pair.iterations;
    doc.doc["result"] = r;
    out = doc.render();
    return 0;
}

template <typename T>
int cmd_check_vector_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                       const std::map<VertexId, Rational>& xi_r, std::string& out) {
    DocumentBuilder doc("check", a, g.mode());
    auto xi = convert_vector<T>(xi_r);
    auto rep = check_vector<T>(g, num::from_rational<T>(lambda), xi, a.tol, a.cfg());
    json r;
    r["is_almost_harmonic"] = rep.is_almost_harmonic;
    r["is_harmonic"] = rep.is_harmonic;
    r["positivity_ok"] = rep.positivity_ok;
    r["residuals"] = vector_json(rep.residuals);
    json skipped = json::array();
    for (const auto& v : rep.skipped) skipped.push_back(v.token);
    r["skipped"] = skipped;
    r["violations"] = rep.violations;
    doc.doc["result"] = r;
    out = doc.render();
    return rep.is_almost_harmonic ? 0 : 1;
}

template <typename T>
int cmd_kernel_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                 const VertexId& v0, const VertexId& target,
                 const std::optional<VertexId>& single_v, std::string& out) {
    DocumentBuilder doc("kernel", a, g.mode());
    T lam = num::from_rational<T>(lambda);
    std::vector<VertexId> vs = single_v ? std::vector<VertexId>{*single_v}
                                        : resolve_window(g, a, v0);
    json arr = json::array();
    std::ostringstream tsv;
    tsv << "v\tw\tvalue\n";
    for (const auto& v : vs) {
        auto kv = martin_kernel<T>(g, lam, v0, v, target, a.cfg());
        json item;
        item["v"] = v.token;
        item["value"] = num_json(kv.value);
        item["numerator"] = num_json(kv.numerator);
        item["denominator"] = num_json(kv.denominator);
        item["upper"] = kv.upper ? num_json(*kv.upper) : json(nullptr);
        arr.push_back(item);
        tsv << v.token << "\t" << target.token << "\t" << num::to_double(kv.value) << "\n";
    }
    json r;
    r["base_vertex"] = v0.token;
    r["target"] = target.token;
    r["kernels"] = arr;
    r["certainty"] = "lower-bound";
    doc.doc["result"] = r;
    if (a.format == "tsv") doc.tsv = tsv.str();
    out = doc.render();
    return 0;
}

template <typename T>
int cmd_kernel_limit_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                       const VertexId& v0, const std::vector<VertexId>& targets,
                       std::string& out) {
    DocumentBuilder doc("kernel-limit", a, g.mode());
    auto window = resolve_window(g, a, v0);
    auto rep = kernel_limit<T>(g, num::from_rational<T>(lambda), v0, targets, window, a.cfg());
    json r;
    r["base_vertex"] = v0.token;
    json tg = json::array();
    for (const auto& t : rep.targets) tg.push_back(t.token);
    r["targets"] = tg;
    r["verdict"] = rep.verdict == LimitVerdict::Converged ? "converged" : "inconclusive";
    r["cauchy_gap"] = rep.cauchy_gap;
    r["limit_kind"] = to_string(rep.limit_estimate.kind);
    r["limit"] = vector_json(rep.limit_estimate.values);
    r["certainty"] = "heuristic";
    doc.doc["result"] = r;
    if (a.format == "tsv") {
        std::ostringstream os;
        os << "v";
        for (const auto& t : rep.targets) os << "\tK(" << t.token << ")";
        os << "\n";
        for (const auto& [v, traj] : rep.trajectories) {
            os << v.token;
            for (const auto& x : traj) os << "\t" << num::to_double(x);
            os << "\n";
        }
        doc.tsv = os.str();
    }
    out = doc.render();
    return rep.verdict == LimitVerdict::Converged ? 0 : 1;
}

template <typename T>
int cmd_sample_t(const CommonArgs& a, const GraphSource& g, const Rational& lambda,
                 const VertexId& v0, const VertexValueSource<T>& psi, std::size_t n_paths,
                 std::size_t horizon, std::string& out) {
    DocumentBuilder doc("sample", a, g.mode());
    auto window = resolve_window(g, a, v0);
    TruncationConfig cfg = a.cfg();
    auto kern = h_transform<T>(g, num::from_rational<T>(lambda), psi, window, cfg);
    auto rep = sample_boundary_paths<T>(kern, v0, n_paths, horizon, a.seed, window, cfg);
    json r;
    r["n_paths"] = rep.n_paths;
    r["horizon"] = rep.horizon;
    r["seed"] = rep.seed;
    r["fraction_converged"] = rep.fraction_converged;
    r["deviation_tolerance"] = rep.deviation_tolerance;
    json paths = json::array();
    for (std::size_t i = 0; i < rep.paths.size(); ++i) {
        json p;
        json cps = json::array();
        for (const auto& v : rep.paths[i]) cps.push_back(v.token);
        p["checkpoints"] = cps;
        p["deviations"] = rep.deviation_traj[i];
        p["final_deviation"] = rep.final_deviation[i];
        paths.push_back(p);
    }
    r["paths"] = paths;
    r["certainty"] = "heuristic";
    doc.doc["result"] = r;
    if (a.format == "tsv") {
        std::ostringstream os;
        os << "path\tfinal_vertex\tfinal_deviation\tconverged\n";
        for (std::size_t i = 0; i < rep.paths.size(); ++i) {
            os << i << "\t" << rep.paths[i].back().token << "\t" << rep.final_deviation[i]
               << "\t" << (rep.final_deviation[i] <= rep.deviation_tolerance ? 1 : 0) << "\n";
        }
        doc.tsv = os.str();
    }
    out = doc.render();
    return 0;
}

int cmd_check_suite(const CommonArgs& a, const std::string& suite, std::string& out) {
    if (suite != "core") throw std::invalid_argument("unknown suite: " + suite);
    DocumentBuilder doc("check", a, ArithmeticMode::Exact);
    auto results = run_core_suites(a.seed);
    json arr = json::array();
    int failures = 0, checks = 0;
    for (const auto& s : results) {
        json item;
        item["suite"] = s.name;
        item["checks"] = s.checks;
        item["failures"] = s.failures;
        item["messages"] = s.messages;
        arr.push_back(item);
        failures += s.failures;
        checks += s.checks;
    }
    json r;
    r["suites"] = arr;
    r["total_checks"] = checks;
    r["total_failures"] = failures;
    doc.doc["result"] = r;
    if (a.format == "tsv") {
        std::ostringstream os;
        os << "suite\tchecks\tfailures\n";
        for (const auto& s : results)
            os << s.name << "\t" << s.checks << "\t" << s.failures << "\n";
        doc.tsv = os.str();
    }
    out = doc.render();
    return failures == 0 ? 0 : 1;
}

json error_document(const std::string& command, const std::string& kind,
                    const std::string& message) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = command;
    doc["error"] = {{"kind", kind}, {"message", message}};
    return doc;
}

std::vector<VertexId> load_targets_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open targets file: " + path);
    std::vector<VertexId> out;
    std::string tok;
    while (f >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(f, rest);
            continue;
        }
        out.push_back(VertexId(tok));
    }
    return out;
}

/// Family default target sequences: integer marches for zwalk/halfline, the
/// emitter column for star_emitter.
std::vector<VertexId> family_targets(const GraphSource& g, const std::string& direction,
                                     std::size_t count) {
    if (g.is_finite())
        throw std::invalid_argument("--family-direction applies to generator sources");
    const std::string fam = g.generator().name();
    std::vector<VertexId> out;
    if (fam == "zwalk") {
        for (std::size_t k = 1; k <= count; ++k)
            out.push_back(VertexId((direction == "-" ? "-" : "") + std::to_string(k)));
        return out;
    }
    if (fam == "halfline") {
        for (std::size_t k = 1; k <= count; ++k) out.push_back(VertexId(std::to_string(k)));
        return out;
    }
    if (fam == "star_emitter") {
        for (std::size_t k = 1; k <= count; ++k)
            out.push_back(VertexId("w" + std::to_string(k)));
        return out;
    }
    throw std::invalid_argument("no default target sequence for family '" + fam + "'");
}

}  // namespace

RunResult run(const std::vector<std::string>& args) {
    CLI::App app{"analysis of positive eigenvector cones on countable weighted digraphs"};
    app.require_subcommand(1);

    CommonArgs a;
    std::string lambda_text, v_tok, w_tok, v0_tok, target_tok, subset_file, vector_file,
        psi_file, psi_expr, suite, targets_file, family_direction;
    std::size_t n_paths = 100, horizon = 200, target_count = 40;

    auto* analyze = app.add_subcommand("analyze", "assumption report, beta0 and recurrence");
    add_common(analyze, a);

    auto* beta0 = app.add_subcommand("beta0", "critical value bounds");
    add_common(beta0, a);

    auto* classify = app.add_subcommand("classify", "recurrence classification at beta0");
    add_common(classify, a);

    auto* green = app.add_subcommand("green", "truncated Green series");
    add_common(green, a);
    green->add_option("--v", v_tok, "source vertex")->required();
    green->add_option("--w", w_tok, "target vertex")->required();
    green->add_option("--lambda", lambda_text, "lambda = e^beta")->required();

    auto* solve = app.add_subcommand("solve", "extreme points of the normalized solution set");
    add_common(solve, a);
    solve->add_option("--lambda", lambda_text, "lambda = e^beta")->required();
    solve->add_option("--v0", v0_tok, "normalization vertex")->required();

    auto* certify = app.add_subcommand("certify", "no-solution certificate search");
    add_common(certify, a);
    certify->add_option("--lambda", lambda_text, "lambda = e^beta")->required();

    auto* extend = app.add_subcommand("extend", "extension from a hereditary set");
    add_common(extend, a);
    extend->add_option("--subset", subset_file, "vector file on the hereditary set")
        ->required();
    extend->add_option("--lambda", lambda_text, "lambda = e^beta")->required();

    auto* riesz = app.add_subcommand("riesz", "harmonic part plus potential charge");
    add_common(riesz, a);
    riesz->add_option("--vector", vector_file, "vector file for psi")->required();
    riesz->add_option("--lambda", lambda_text, "lambda = e^beta")->required();

    auto* kernel = app.add_subcommand("kernel", "Martin kernel values");
    add_common(kernel, a);
    kernel->add_option("--v0", v0_tok, "base vertex")->required();
    kernel->add_option("--target", target_tok, "target vertex")->required();
    kernel->add_option("--v", v_tok, "single source vertex (default: probe window)");
    kernel->add_option("--lambda", lambda_text, "lambda = e^beta")->required();

    auto* klimit = app.add_subcommand("kernel-limit", "kernel limits along a target sequence");
    add_common(klimit, a);
    klimit->add_option("--v0", v0_tok, "base vertex")->required();
    klimit->add_option("--lambda", lambda_text, "lambda = e^beta")->required();
    auto* tf = klimit->add_option("--targets-file", targets_file, "file of target vertices");
    auto* fd = klimit->add_option("--family-direction", family_direction,
                                  "family default sequence: + or -")
                   ->check(CLI::IsMember({"+", "-"}));
    klimit->add_option("--count", target_count, "length of the default sequence");
    tf->excludes(fd);
    fd->excludes(tf);

    auto* sample = app.add_subcommand("sample", "h-transform path sampling");
    add_common(sample, a);
    sample->add_option("--v0", v0_tok, "start vertex (default: window base)");
    sample->add_option("--lambda", lambda_text, "lambda = e^beta")->required();
    auto* pf = sample->add_option("--psi", psi_file, "vector file for the harmonic base psi");
    auto* pe = sample->add_option("--psi-expr", psi_expr,
                                  "closed-form psi, e.g. geom:2 (psi_i = 2^i)");
    pf->excludes(pe);
    pe->excludes(pf);
    sample->add_option("--paths", n_paths, "number of paths");
    sample->add_option("--horizon", horizon, "steps per path");

    auto* check = app.add_subcommand("check", "validate a vector or run invariant suites");
    add_common(check, a);
    check->add_option("--suite", suite, "invariant suite name (core)");
    check->add_option("--vector", vector_file, "vector file to validate");
    check->add_option("--lambda", lambda_text, "lambda = e^beta");

    std::string command = args.empty() ? "" : args[0];
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::ostringstream os;
            os << app.help();
            return {0, os.str()};
        }
        return {2, error_document(command, "usage", e.what()).dump(2) + "\n"};
    }

    auto is_exact = [](const GraphSource& g) { return g.mode() == ArithmeticMode::Exact; };

    auto dispatch = [&]() -> RunResult {
        std::string out;
        if (analyze->parsed()) return {cmd_analyze(a, out), out};
        if (beta0->parsed()) return {cmd_beta0(a, out), out};
        if (classify->parsed()) return {cmd_classify(a, out), out};

        if (green->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            int rc = is_exact(g) ? cmd_green_t<Rational>(a, g, lam, VertexId(v_tok),
                                                         VertexId(w_tok), out)
                                 : cmd_green_t<double>(a, g, lam, VertexId(v_tok),
                                                       VertexId(w_tok), out);
            return {rc, out};
        }
        if (solve->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            int rc = is_exact(g) ? cmd_solve_t<Rational>(a, g, lam, VertexId(v0_tok), out)
                                 : cmd_solve_t<double>(a, g, lam, VertexId(v0_tok), out);
            return {rc, out};
        }
        if (certify->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            int rc = is_exact(g) ? cmd_certify_t<Rational>(a, g, lam, out)
                                 : cmd_certify_t<double>(a, g, lam, out);
            return {rc, out};
        }
        if (extend->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            auto eta = load_vector_file(subset_file);
            int rc = is_exact(g) ? cmd_extend_t<Rational>(a, g, lam, eta, out)
                                 : cmd_extend_t<double>(a, g, lam, eta, out);
            return {rc, out};
        }
        if (riesz->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            auto psi = load_vector_file(vector_file);
            int rc = is_exact(g) ? cmd_riesz_t<Rational>(a, g, lam, psi, out)
                                 : cmd_riesz_t<double>(a, g, lam, psi, out);
            return {rc, out};
        }
        if (kernel->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            std::optional<VertexId> sv;
            if (!v_tok.empty()) sv = VertexId(v_tok);
            int rc = is_exact(g)
                         ? cmd_kernel_t<Rational>(a, g, lam, VertexId(v0_tok),
                                                  VertexId(target_tok), sv, out)
                         : cmd_kernel_t<double>(a, g, lam, VertexId(v0_tok),
                                                VertexId(target_tok), sv, out);
            return {rc, out};
        }
        if (klimit->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            std::vector<VertexId> targets;
            if (!targets_file.empty())
                targets = load_targets_file(targets_file);
            else if (!family_direction.empty())
                targets = family_targets(g, family_direction, target_count);
            else
                throw std::invalid_argument("give --targets-file or --family-direction");
            int rc = is_exact(g) ? cmd_kernel_limit_t<Rational>(a, g, lam, VertexId(v0_tok),
                                                                targets, out)
                                 : cmd_kernel_limit_t<double>(a, g, lam, VertexId(v0_tok),
                                                              targets, out);
            return {rc, out};
        }
        if (sample->parsed()) {
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            VertexId v0 = !v0_tok.empty()
                              ? VertexId(v0_tok)
                              : (g.is_finite() ? g.finite().vertices().front()
                                               : g.generator().metadata().start);
            if (psi_file.empty() && psi_expr.empty())
                throw std::invalid_argument("give --psi FILE or --psi-expr EXPR");
            if (is_exact(g)) {
                VertexValueSource<Rational> psi;
                if (!psi_file.empty())
                    psi = VertexValueSource<Rational>::from_map(
                        convert_vector<Rational>(load_vector_file(psi_file)));
                else if (psi_expr.rfind("geom:", 0) == 0)
                    psi = VertexValueSource<Rational>::from_fn(
                        geometric_vertex_fn<Rational>(parse_rational(psi_expr.substr(5))));
                else
                    throw std::invalid_argument("unknown psi expression: " + psi_expr);
                return {cmd_sample_t<Rational>(a, g, lam, v0, psi, n_paths, horizon, out), out};
            }
            VertexValueSource<double> psi;
            if (!psi_file.empty())
                psi = VertexValueSource<double>::from_map(
                    convert_vector<double>(load_vector_file(psi_file)));
            else if (psi_expr.rfind("geom:", 0) == 0)
                psi = VertexValueSource<double>::from_fn(geometric_vertex_fn<double>(
                    num::to_double(parse_rational(psi_expr.substr(5)))));
            else
                throw std::invalid_argument("unknown psi expression: " + psi_expr);
            return {cmd_sample_t<double>(a, g, lam, v0, psi, n_paths, horizon, out), out};
        }
        if (check->parsed()) {
            if (!suite.empty()) return {cmd_check_suite(a, suite, out), out};
            if (vector_file.empty() || lambda_text.empty())
                throw std::invalid_argument(
                    "check needs --suite NAME or --vector FILE with --lambda");
            GraphSource g = load_graph(a);
            Rational lam = parse_lambda(lambda_text);
            auto xi = load_vector_file(vector_file);
            int rc = is_exact(g) ? cmd_check_vector_t<Rational>(a, g, lam, xi, out)
                                 : cmd_check_vector_t<double>(a, g, lam, xi, out);
            return {rc, out};
        }
        throw std::invalid_argument("no command given");
    };

    std::string cmd_name =
        app.get_subcommands().empty() ? command : app.get_subcommands().front()->get_name();
    try {
        return dispatch();
    } catch (const DomainError& e) {
        return {1, error_document(cmd_name, "domain", e.what()).dump(2) + "\n"};
    } catch (const UnknownVertexError& e) {
        return {1, error_document(cmd_name, "domain", e.what()).dump(2) + "\n"};
    } catch (const ParseError& e) {
        return {1, error_document(cmd_name, "input", e.what()).dump(2) + "\n"};
    } catch (const std::invalid_argument& e) {
        return {2, error_document(cmd_name, "usage", e.what()).dump(2) + "\n"};
    } catch (const std::runtime_error& e) {
        return {1, error_document(cmd_name, "error", e.what()).dump(2) + "\n"};
    }
}

}  // namespace kms::cli
