#include "hypwalk/config.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hypwalk/report.hpp"
#include "hypwalk/verify.hpp"

namespace hypwalk {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

[[noreturn]] void fail_at(const std::string& file, int line, const std::string& msg) {
    throw ValidationError(file + ":" + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_top_level(const std::string& body, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : body) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !parts.empty()) parts.push_back(cur);
    return parts;
}

std::map<std::string, std::string> parse_inline_map(const std::string& file, int line,
                                                    const std::string& value) {
    std::string body = trim(value);
    if (body.size() < 2 || body.front() != '{' || body.back() != '}')
        fail_at(file, line, "expected {key: value, ...}");
    body = body.substr(1, body.size() - 2);
    std::map<std::string, std::string> out;
    if (trim(body).empty()) return out;
    for (const auto& part : split_top_level(body, ',')) {
        auto colon = part.rfind(':');
        if (colon == std::string::npos) fail_at(file, line, "map entry needs key: value");
        std::string key = trim(part.substr(0, colon));
        std::string val = trim(part.substr(colon + 1));
        if (key.empty() || val.empty()) fail_at(file, line, "empty key or value in map");
        if (out.contains(key)) fail_at(file, line, "duplicate key \"" + key + "\"");
        out[key] = val;
    }
    return out;
}

std::vector<std::string> parse_inline_list(const std::string& file, int line,
                                           const std::string& value) {
    std::string body = trim(value);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']')
        fail_at(file, line, "expected [v1, v2, ...]");
    body = body.substr(1, body.size() - 2);
    std::vector<std::string> out;
    if (trim(body).empty()) return out;
    for (const auto& part : split_top_level(body, ',')) {
        std::string v = trim(part);
        if (v.empty()) fail_at(file, line, "empty list entry");
        out.push_back(v);
    }
    return out;
}

long parse_integer(const std::string& file, int line, const std::string& value) {
    std::string v = trim(value);
    long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        fail_at(file, line, "expected an integer, got \"" + v + "\"");
    return out;
}

double parse_double(const std::string& file, int line, const std::string& value) {
    std::string v = trim(value);
    try {
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        fail_at(file, line, "expected a number, got \"" + v + "\"");
    }
}

}  // namespace

void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& file) {
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) fail_at(file, lineno, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) fail_at(file, lineno, "empty key or value");

        if (key == "group") {
            spec.group = unquote(value);
        } else if (key == "command") {
            spec.command = unquote(value);
        } else if (key == "mu0") {
            spec.mu0 = parse_inline_map(file, lineno, value);
        } else if (key == "phi") {
            spec.phi = parse_inline_map(file, lineno, value);
        } else if (key == "metric") {
            spec.metric = unquote(value);
        } else if (key == "n") {
            spec.n = static_cast<int>(parse_integer(file, lineno, value));
        } else if (key == "N") {
            spec.N = parse_integer(file, lineno, value);
        } else if (key == "n_max") {
            spec.n_max = static_cast<int>(parse_integer(file, lineno, value));
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_integer(file, lineno, value));
        } else if (key == "checkpoints") {
            spec.checkpoints.clear();
            for (const auto& v : parse_inline_list(file, lineno, value))
                spec.checkpoints.push_back(static_cast<int>(parse_integer(file, lineno, v)));
        } else if (key == "lambda") {
            if (trim(value).front() == '[') {
                spec.lambdas.clear();
                for (const auto& v : parse_inline_list(file, lineno, value))
                    spec.lambdas.push_back(parse_double(file, lineno, v));
                if (!spec.lambdas.empty()) spec.lambda = spec.lambdas.front();
            } else {
                spec.lambda = parse_double(file, lineno, value);
                spec.lambdas = {spec.lambda};
            }
        } else if (key == "alpha") {
            spec.alpha = parse_double(file, lineno, value);
        } else if (key == "method") {
            spec.method = unquote(value);
        } else if (key == "target") {
            spec.target = unquote(value);
        } else if (key == "side") {
            spec.side = unquote(value);
        } else if (key == "z") {
            spec.z = unquote(value);
        } else if (key == "R") {
            spec.R = static_cast<int>(parse_integer(file, lineno, value));
        } else if (key == "T") {
            spec.T = static_cast<int>(parse_integer(file, lineno, value));
        } else if (key == "out") {
            spec.out_dir = unquote(value);
        } else if (key == "threads") {
            spec.threads = static_cast<int>(parse_integer(file, lineno, value));
        } else if (key == "profile") {
            spec.profile = unquote(value);
        } else if (key == "records") {
            std::string v = unquote(value);
            if (v == "true") spec.emit_records = true;
            else if (v == "false") spec.emit_records = false;
            else fail_at(file, lineno, "records must be true or false");
        } else if (key == "engine") {
            spec.engine = unquote(value);
        } else {
            fail_at(file, lineno, "unknown key \"" + key + "\"");
        }
    }
}

ExperimentSpec load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    ExperimentSpec spec;
    apply_config_text(spec, buf.str(), path);
    return spec;
}

GroupModel ExperimentSpec::build_model() const { return GroupModel::parse(group); }

namespace {

Letter resolve_letter_token(const GroupModel& model, const std::string& token) {
    const auto& tokens = model.alphabet().tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i] == token) return static_cast<Letter>(i);
    // free-product shorthand "x1" for "x1^1"
    if (model.kind() == GroupKind::FreeProduct) {
        std::string full = token + "^1";
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (tokens[i] == full) return static_cast<Letter>(i);
    }
    throw ValidationError("unknown letter \"" + token + "\" for group " + model.description());
}

}  // namespace

StepMeasure ExperimentSpec::build_measure(const GroupModel& model) const {
    if (mu0.empty()) return StepMeasure::uniform(model);
    const int S = model.alphabet_size();
    std::vector<Rational> masses(static_cast<std::size_t>(S), Rational(-1));
    for (const auto& [token, literal] : mu0) {
        Letter a = resolve_letter_token(model, token);
        Letter b = model.alphabet().inverse[static_cast<std::size_t>(a)];
        Rational r = rational_from_decimal(literal);
        for (Letter x : {a, b}) {
            Rational& slot = masses[static_cast<std::size_t>(x)];
            if (slot != Rational(-1) && slot != r)
                throw ValidationError("NotSymmetric{" + model.alphabet().tokens[static_cast<std::size_t>(x)] +
                                      "}: conflicting masses");
            slot = r;
        }
    }
    for (Letter a = 0; a < S; ++a)
        if (masses[static_cast<std::size_t>(a)] == Rational(-1))
            throw ValidationError("mu0 missing mass for letter " +
                                  model.alphabet().tokens[static_cast<std::size_t>(a)]);
    StepMeasure m = StepMeasure::from_rationals(std::move(masses));
    auto check = validate_measure(model, m);
    if (!check.ok()) throw ValidationError("invalid mu0: " + check.describe(model));
    return m;
}

MeasureCurve ExperimentSpec::build_curve(const GroupModel& model) const {
    if (phi.empty())
        throw ValidationError("this command needs a tilt: set phi = {a: 1.0, ...}");
    StepMeasure base = build_measure(model);
    const int S = model.alphabet_size();
    std::vector<Rational> tilt(static_cast<std::size_t>(S), Rational(0));
    for (const auto& [token, literal] : phi) {
        Letter a = resolve_letter_token(model, token);
        Letter b = model.alphabet().inverse[static_cast<std::size_t>(a)];
        Rational r = rational_from_decimal(literal);
        tilt[static_cast<std::size_t>(a)] = r;
        tilt[static_cast<std::size_t>(b)] = r;
    }
    return MeasureCurve::make_exact(model, std::move(base), std::move(tilt));
}

nlohmann::ordered_json ExperimentSpec::echo() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["group"] = group;
    if (!mu0.empty()) j["mu0"] = mu0;
    if (!phi.empty()) j["phi"] = phi;
    j["metric"] = metric;
    j["n"] = n;
    j["N"] = N;
    j["n_max"] = n_max;
    j["seed"] = seed;
    if (!checkpoints.empty()) j["checkpoints"] = checkpoints;
    if (!lambdas.empty()) j["lambda"] = lambdas;
    else j["lambda"] = lambda;
    j["alpha"] = alpha;
    if (!method.empty()) j["method"] = method;
    j["target"] = target;
    j["side"] = side;
    if (!z.empty()) j["z"] = z;
    if (R >= 0) j["R"] = R;
    j["T"] = T;
    j["profile"] = profile;
    j["records"] = emit_records;
    j["engine"] = engine;
    return j;
}

namespace {

struct MetricHandle {
    std::unique_ptr<Metric> owned;
    const Metric* ptr = nullptr;
};

MetricHandle make_metric(const ExperimentSpec& spec, const GroupModel& model,
                         const StepMeasure& measure) {
    MetricHandle h;
    if (spec.metric == "word") {
        h.owned = std::make_unique<WordMetric>(model);
    } else if (spec.metric == "green-tree") {
        FirstPassageTable table = tree_first_passage(model, measure);
        h.owned = std::make_unique<LetterCostMetric>(tree_green_metric(model, table));
    } else if (spec.metric == "green-ball") {
        h.owned = std::make_unique<BallGreenMetric>(model, measure);
    } else {
        throw ValidationError("unknown metric \"" + spec.metric +
                              "\" (want word, green-tree, green-ball)");
    }
    h.ptr = h.owned.get();
    return h;
}

std::string csv_of_series(const std::string& header, const std::vector<double>& xs, int start = 0) {
    std::ostringstream out;
    out.precision(17);
    out << header << "\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
        out << (start + static_cast<int>(i)) << "," << xs[i] << "\n";
    return out.str();
}

int dispatch(const ExperimentSpec& spec, std::vector<std::pair<std::string, std::string>>& files,
             std::string& summary) {
    GroupModel model = spec.build_model();
    StepMeasure measure = spec.build_measure(model);
    EstimatorOptions opts;
    opts.threads = spec.threads;
    Json result;

    if (spec.command == "escape") {
        auto metric = make_metric(spec, model, measure);
        Estimate est = escape_rate(model, measure, *metric.ptr, spec.n, spec.N, spec.seed, opts);
        result = estimate_to_json(est, "escape_rate");
        files.emplace_back("escape.json", result.dump(2) + "\n");
        summary = "escape_rate = " + std::to_string(est.value) + " +- " + std::to_string(est.std_error);
    } else if (spec.command == "entropy") {
        if (spec.method == "convolution") {
            auto rows = entropy_via_convolution(model, measure, spec.n_max, opts);
            std::ostringstream csv;
            csv.precision(17);
            csv << "n,entropy,increment\n";
            for (const auto& r : rows) {
                csv << r.n << "," << r.entropy << ",";
                if (r.n > 0) csv << r.increment;
                csv << "\n";
            }
            result["quantity"] = "entropy_series";
            result["method"] = "convolution";
            result["n_max"] = spec.n_max;
            result["value"] = rows.back().increment;
            result["entropy_at_n_max"] = rows.back().entropy;
            files.emplace_back("entropy.json", result.dump(2) + "\n");
            files.emplace_back("entropy.csv", csv.str());
            summary = "H increment at n_max = " + std::to_string(rows.back().increment);
        } else {
            Estimate est = entropy_via_green_speed(model, measure, spec.n, spec.N, spec.seed, opts);
            result = estimate_to_json(est, "entropy");
            files.emplace_back("entropy.json", result.dump(2) + "\n");
            summary = "entropy = " + std::to_string(est.value) + " +- " + std::to_string(est.std_error);
        }
    } else if (spec.command == "covariance") {
        MeasureCurve curve = spec.build_curve(model);
        auto metric = make_metric(spec, model, measure);
        Estimate est = covariance_sigma(model, curve, *metric.ptr, spec.n, spec.N, spec.seed, opts);
        result = estimate_to_json(est, "covariance_sigma");
        files.emplace_back("covariance.json", result.dump(2) + "\n");
        summary = "sigma = " + std::to_string(est.value) + " +- " + std::to_string(est.std_error);
    } else if (spec.command == "derivative") {
        MeasureCurve curve = spec.build_curve(model);
        auto metric = make_metric(spec, model, measure);
        Estimate est;
        std::string method = spec.method.empty() ? "fd" : spec.method;
        if (method == "fd") {
            FdTarget target = spec.target == "entropy" ? FdTarget::Entropy : FdTarget::EscapeRate;
            FdSide side = spec.side == "forward" ? FdSide::Forward : FdSide::Central;
            est = fd_derivative(model, curve, target, metric.ptr, spec.lambda, spec.n, spec.N,
                                spec.seed, opts, side);
        } else if (method == "sigma") {
            est = covariance_sigma(model, curve, *metric.ptr, spec.n, spec.N, spec.seed, opts);
        } else if (method == "girsanov") {
            est = girsanov_derivative(model, curve, *metric.ptr, spec.n, spec.N, spec.seed,
                                      spec.alpha, opts);
        } else {
            throw ValidationError("unknown derivative method \"" + method +
                                  "\" (want fd, sigma, girsanov)");
        }
        result = estimate_to_json(est, "derivative");
        files.emplace_back("derivative.json", result.dump(2) + "\n");
        summary = est.method + " = " + std::to_string(est.value) + " +- " +
                  std::to_string(est.std_error);
    } else if (spec.command == "clt") {
        MeasureCurve curve = spec.build_curve(model);
        auto metric = make_metric(spec, model, measure);
        std::vector<int> grid = spec.checkpoints;
        if (grid.empty()) grid = {spec.n / 2, spec.n};
        CltReport report = clt_report(model, curve, *metric.ptr, grid, spec.N, spec.seed,
                                      std::nullopt, opts);
        result = clt_report_to_json(report);
        files.emplace_back("clt.json", result.dump(2) + "\n");
        files.emplace_back("clt.csv", clt_report_to_csv(report));
        summary = "clt grid points: " + std::to_string(grid.size());
    } else if (spec.command == "green") {
        std::string method = spec.method.empty() ? "tree" : spec.method;
        GroupElement zel = spec.z.empty() ? model.identity() : model.parse_word(spec.z);
        result["quantity"] = "green_distance";
        result["z"] = model.format(zel);
        result["method"] = method;
        if (method == "tree") {
            FirstPassageTable table = tree_first_passage(model, measure);
            double d = green_distance_tree(model, table, zel);
            result["value"] = d;
            result["lower"] = d;
            result["upper"] = d;
            result["green_at_id"] = table.green_at_id();
            result["residual"] = table.residual;
            Json q = Json::object();
            for (Letter s = 0; s < model.alphabet_size(); ++s)
                q[model.alphabet().tokens[static_cast<std::size_t>(s)]] =
                    table.q[static_cast<std::size_t>(s)];
            result["first_passage"] = q;
            summary = "d_G(id,z) = " + std::to_string(d);
        } else if (method == "ball") {
            int R = spec.R >= 0 ? spec.R : static_cast<int>(zel.word.size()) + 15;
            GreenEvaluation eval = green_distance_ball(model, measure, zel, R);
            result["R"] = R;
            result["lower"] = eval.lower;
            result["upper"] = eval.upper;
            result["hitting_lower"] = eval.hitting_lower;
            result["tail"] = eval.tail;
            summary = "d_G bracket [" + std::to_string(eval.lower) + ", " +
                      std::to_string(eval.upper) + "]";
        } else if (method == "series") {
            SeriesEvaluation eval = green_function_series(model, measure, zel, spec.T);
            result["T"] = spec.T;
            result["partial"] = eval.partial;
            result["tail"] = eval.tail;
            result["lower"] = eval.lower();
            result["upper"] = eval.upper();
            result["rho_hat"] = eval.rho_hat;
            result["from_chain"] = eval.from_chain;
            summary = "G bracket [" + std::to_string(eval.lower()) + ", " +
                      std::to_string(eval.upper()) + "]";
        } else {
            throw ValidationError("unknown green method \"" + method + "\" (want tree, ball, series)");
        }
        files.emplace_back("green.json", result.dump(2) + "\n");
    } else if (spec.command == "oracle") {
        std::string op = spec.method.empty() ? "entropy" : spec.method;
        OracleOptions oopts = opts.oracle;
        result["op"] = op;
        result["inputs"] = spec.echo();
        if (op == "entropy") {
            auto d = convolve_power(model, measure, spec.n, oopts);
            double h = 0.0;
            for (const auto& [w, p] : d.mass)
                if (p > 0.0) h -= p * std::log(p);
            result["value"] = h;
            result["exact"] = d.exact;
            result["budget_used"] = d.support();
            summary = "H(mu^n) = " + std::to_string(h);
        } else if (op == "entropy-series") {
            auto hs = exact_entropy_series(model, measure, spec.n_max, oopts);
            result["value"] = hs.back();
            result["exact"] = false;
            result["budget_used"] = convolution_support_estimate(model, spec.n_max);
            files.emplace_back("entropy_series.csv", csv_of_series("n,entropy", hs));
            summary = "H series up to n_max";
        } else if (op == "mean-distance") {
            auto metric = make_metric(spec, model, measure);
            double v = exact_mean_distance(model, measure, spec.n, *metric.ptr, oopts);
            result["value"] = v;
            result["exact"] = measure.has_exact();
            result["budget_used"] = convolution_support_estimate(model, spec.n);
            summary = "E d(id,Z_n) = " + std::to_string(v);
        } else if (op == "covariance") {
            MeasureCurve curve = spec.build_curve(model);
            auto metric = make_metric(spec, model, measure);
            CovarianceEngine engine = spec.engine == "paths" ? CovarianceEngine::Paths
                                                             : CovarianceEngine::Convolution;
            double v = exact_covariance(model, curve.base, curve.nu, spec.n, *metric.ptr, oopts,
                                        engine, curve.nu_exact ? &*curve.nu_exact : nullptr);
            result["value"] = v;
            result["exact"] = curve.base.has_exact() && curve.nu_exact.has_value();
            result["engine"] = spec.engine;
            result["budget_used"] =
                engine == CovarianceEngine::Paths
                    ? static_cast<std::size_t>(
                          std::pow(static_cast<double>(model.alphabet_size()), spec.n))
                    : convolution_support_estimate(model, spec.n);
            summary = "E[d M_n] = " + std::to_string(v);
        } else if (op == "tilted-mean") {
            MeasureCurve curve = spec.build_curve(model);
            auto metric = make_metric(spec, model, measure);
            double v = exact_tilted_mean(model, curve, spec.lambda, spec.n, *metric.ptr, oopts);
            result["value"] = v;
            result["exact"] = false;
            result["lambda"] = spec.lambda;
            result["budget_used"] = convolution_support_estimate(model, spec.n);
            summary = "E^lambda d = " + std::to_string(v);
        } else if (op == "girsanov-check") {
            MeasureCurve curve = spec.build_curve(model);
            auto metric = make_metric(spec, model, measure);
            GirsanovCheck check =
                girsanov_path_check(model, curve, spec.lambda, spec.n, *metric.ptr, oopts);
            result["weighted_mean"] = check.weighted_mean;
            result["direct_mean"] = check.direct_mean;
            result["weighted_total"] = check.weighted_total;
            result["value"] = std::abs(check.weighted_mean - check.direct_mean);
            result["exact"] = false;
            result["budget_used"] = static_cast<std::size_t>(
                std::pow(static_cast<double>(model.alphabet_size()), spec.n));
            summary = "|weighted - direct| = " + std::to_string(result["value"].get<double>());
        } else if (op == "spectral-radius") {
            auto seq = spectral_radius_sequence(model, measure, spec.n_max, oopts);
            result["value"] = seq.back();
            auto upper = spectral_radius_upper(model, measure);
            result["rho_hat"] = upper.rho_hat;
            result["exact"] = true;
            result["budget_used"] = upper.from_chain
                                        ? static_cast<std::size_t>(2 * spec.n_max)
                                        : convolution_support_estimate(model, 2 * spec.n_max);
            files.emplace_back("spectral_radius.csv", csv_of_series("n,r_n", seq, 1));
            summary = "r_" + std::to_string(seq.size()) + " = " + std::to_string(seq.back());
        } else if (op == "sandwich") {
            auto metric = make_metric(spec, model, measure);
            auto rep = mean_distance_sandwich(model, measure, *metric.ptr, spec.n_max, oopts);
            result["tau0_hat"] = rep.tau0_hat;
            result["subadditive_ok"] = rep.subadditive_ok;
            result["value"] = rep.tau0_hat;
            result["exact"] = true;
            result["budget_used"] = convolution_support_estimate(model, spec.n_max);
            files.emplace_back("mean_distance.csv", csv_of_series("n,a_n", rep.a));
            summary = "tau0_hat = " + std::to_string(rep.tau0_hat);
        } else if (op == "convolve") {
            auto d = convolve_power(model, measure, spec.n, oopts);
            result["support"] = d.support();
            result["total"] = d.total();
            result["exact"] = d.exact;
            result["value"] = static_cast<double>(d.support());
            result["budget_used"] = d.support();
            if (d.support() <= 10000) {
                std::ostringstream csv;
                csv.precision(17);
                csv << "word,mass\n";
                for (const auto& [w, p] : d.mass)
                    csv << model.format(GroupElement{w}) << "," << p << "\n";
                files.emplace_back("distribution.csv", csv.str());
            }
            summary = "support(mu^n) = " + std::to_string(d.support());
        } else {
            throw ValidationError("unknown oracle op \"" + op + "\"");
        }
        files.emplace_back("oracle.json", result.dump(2) + "\n");
    } else if (spec.command == "simulate") {
        BatchSpec batch;
        batch.model = &model;
        batch.measure = measure;
        batch.horizon = spec.n;
        batch.checkpoints = spec.checkpoints.empty() ? std::vector<int>{spec.n} : spec.checkpoints;
        batch.trajectories = spec.N;
        batch.seed = spec.seed;
        auto metric = make_metric(spec, model, measure);
        batch.metrics = {metric.ptr};
        MeasureCurve curve;
        if (!spec.phi.empty()) {
            curve = spec.build_curve(model);
            batch.curve = &curve;
            batch.lambdas = spec.lambdas;
        }
        batch.store_records = spec.emit_records;
        batch.threads = spec.threads;
        BatchResult res = sample_batch(batch);

        result["quantity"] = "simulate";
        result["N"] = res.count;
        Json rows = Json::array();
        for (std::size_t cp = 0; cp < batch.checkpoints.size(); ++cp) {
            const auto& s = res.stats[cp];
            double N = static_cast<double>(res.count);
            Json row;
            row["n"] = batch.checkpoints[cp];
            row["mean_distance"] = s.sum_d[0] / N;
            row["mean_distance_se"] =
                std::sqrt(std::max(0.0, s.sum_d2[0] / N - (s.sum_d[0] / N) * (s.sum_d[0] / N)) / N);
            row["mean_M"] = s.sum_M / N;
            row["var_M"] = s.sum_M2 / N - (s.sum_M / N) * (s.sum_M / N);
            row["mean_A"] = s.sum_A / N;
            for (std::size_t j = 0; j < batch.lambdas.size(); ++j) {
                std::ostringstream key;
                key << "mean_weight_lambda_" << batch.lambdas[j];
                row[key.str()] = s.sum_w[j] / N;
            }
            rows.push_back(row);
        }
        result["checkpoints"] = rows;
        files.emplace_back("simulate.json", result.dump(2) + "\n");
        if (spec.emit_records) {
            std::ostringstream csv;
            csv << "index,n,distance,M,A";
            for (double l : batch.lambdas) csv << ",logweight_" << l;
            csv << "\n";
            csv.precision(17);
            for (const auto& rec : res.records) {
                for (std::size_t cp = 0; cp < batch.checkpoints.size(); ++cp) {
                    csv << rec.index << "," << batch.checkpoints[cp] << "," << rec.distance[cp]
                        << "," << rec.martingale[cp] << "," << rec.quadratic[cp];
                    for (std::size_t j = 0; j < batch.lambdas.size(); ++j)
                        csv << "," << rec.logweight[cp * batch.lambdas.size() + j];
                    csv << "\n";
                }
            }
            files.emplace_back("records.csv", csv.str());
        }
        summary = "simulated N = " + std::to_string(res.count);
    } else if (spec.command == "verify") {
        VerifyOptions vopts;
        vopts.profile = parse_profile(spec.profile);
        vopts.seed = spec.seed;
        vopts.threads = spec.threads;
        auto results = run_verification(vopts);
        bool all = true;
        for (const auto& r : results) {
            std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << "  " << r.title << "  ("
                      << r.detail << ")\n";
            all = all && r.passed;
        }
        files.emplace_back("verify.json", verification_to_json(results).dump(2) + "\n");
        summary = all ? "all criteria passed" : "criteria FAILED";
        if (!all) {
            // still emit the report before signalling failure
            return kExitNumerical;
        }
    } else if (spec.command.empty()) {
        throw ValidationError("no command given (set command = ... or use a subcommand)");
    } else {
        throw ValidationError("unknown command \"" + spec.command + "\"");
    }
    return kExitOk;
}

}  // namespace

int run_command(const ExperimentSpec& spec) {
    auto start = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, std::string>> files;
    std::string summary;
    int code = kExitOk;
    try {
        code = dispatch(spec, files, summary);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const UnknownLetter& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const InvalidLambda& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NotCentered& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    double wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    try {
        emit_report(spec.echo(), files, spec.out_dir, wall_ms);
    } catch (const Error& e) {
        std::cerr << "i/o failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    if (!summary.empty()) std::cout << summary << "\n";
    return code;
}

}  // namespace hypwalk
