#include "hypwalk/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace hypwalk {

namespace {

Json metadata_to_json(const Estimate& est) {
    Json meta = Json::object();
    for (const auto& [k, v] : est.metadata) meta[k] = v;
    for (const auto& [k, v] : est.notes) meta[k] = v;
    return meta;
}

}  // namespace

Json estimate_to_json(const Estimate& est, const std::string& quantity) {
    Json j;
    j["quantity"] = quantity;
    j["method"] = est.method;
    j["value"] = est.value;
    j["stderr"] = est.std_error;
    j["n"] = est.n;
    j["N"] = est.N;
    j["seed"] = est.seed;
    j["metadata"] = metadata_to_json(est);
    return j;
}

Json clt_report_to_json(const CltReport& report) {
    Json j;
    j["quantity"] = "clt_report";
    j["ell_hat"] = report.ell_hat;
    j["martingale_variance_exact"] = report.martingale_variance_exact;
    j["N"] = report.N;
    j["seed"] = report.seed;
    Json rows = Json::array();
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
        Json row;
        row["n"] = report.grid[g];
        row["var_d"] = report.var_d[g];
        row["var_M"] = report.var_M[g];
        row["cov"] = report.cov[g];
        row["se_var_d"] = report.se_var_d[g];
        row["se_var_M"] = report.se_var_M[g];
        row["se_cov"] = report.se_cov[g];
        row["ks_d"] = report.ks_d[g];
        row["ks_M"] = report.ks_M[g];
        rows.push_back(row);
    }
    j["grid"] = rows;
    return j;
}

std::string clt_report_to_csv(const CltReport& report) {
    std::ostringstream out;
    out << "n,var_d,var_M,cov,ks_d,ks_M\n";
    out.precision(17);
    for (std::size_t g = 0; g < report.grid.size(); ++g) {
        out << report.grid[g] << "," << report.var_d[g] << "," << report.var_M[g] << ","
            << report.cov[g] << "," << report.ks_d[g] << "," << report.ks_M[g] << "\n";
    }
    return out.str();
}

Json fundamental_report_to_json(const FundamentalInequalityReport& report) {
    Json j;
    j["quantity"] = "fundamental_inequality";
    j["metric"] = report.metric_name;
    j["growth"] = report.growth;
    j["h"] = estimate_to_json(report.h_hat, "entropy");
    j["ell"] = estimate_to_json(report.ell_hat, "escape_rate");
    j["slack"] = report.slack;
    j["slack_stderr"] = report.slack_se;
    j["passes"] = report.passes;
    return j;
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

Json ResultManifest::to_json() const {
    Json j;
    j["version"] = version;
    j["spec"] = spec_echo;
    j["spec_hash"] = spec_hash;
    Json fs = Json::array();
    for (const auto& f : files) {
        Json e;
        e["name"] = f.name;
        e["hash"] = f.hash;
        e["bytes"] = f.bytes;
        fs.push_back(e);
    }
    j["files"] = fs;
    j["wall_ms"] = wall_ms;
    return j;
}

ResultManifest emit_report(const Json& spec_echo,
                           const std::vector<std::pair<std::string, std::string>>& files,
                           const std::string& dir, double wall_ms) {
    if (files.empty()) throw Error("emit_report: no results to write");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir + ": " + ec.message());

    ResultManifest manifest;
    manifest.spec_echo = spec_echo;
    manifest.spec_hash = content_hash(spec_echo.dump());
    manifest.wall_ms = wall_ms;
    manifest.version = library_version();

    for (const auto& [name, payload] : files) {
        fs::path p = fs::path(dir) / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        out << payload;
        out.close();
        if (!out) throw Error("failed writing " + p.string());
        manifest.files.push_back({name, content_hash(payload), payload.size()});
    }

    fs::path mp = fs::path(dir) / "manifest.json";
    std::ofstream mout(mp, std::ios::binary);
    if (!mout) throw Error("cannot write " + mp.string());
    mout << manifest.to_json().dump(2) << "\n";
    return manifest;
}

std::string library_version() { return "0.1.0"; }

}  // namespace hypwalk
