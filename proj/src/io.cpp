#include "matreg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace matreg {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::filesystem::path& file, int line, const std::string& what) {
    throw ParseError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& text, const std::filesystem::path& file, int line) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    double value;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        parse_fail(file, line, "non-numeric value '" + text + "'");
    return value;
}

long parse_long(const std::string& text, const std::filesystem::path& file, int line) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    long value;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        parse_fail(file, line, "non-integer value '" + text + "'");
    return value;
}

void expect_header(const std::string& got, const std::string& want,
                   const std::filesystem::path& file) {
    std::string trimmed = got;
    while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == '\n'))
        trimmed.pop_back();
    if (trimmed != want)
        throw ParseError(file.string() + ":1: expected header '" + want + "', got '" + trimmed + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& p) {
    return p.is_absolute() ? p : base / p;
}

ResponseFamily family_from_manifest(const DataManifest& m,
                                    const std::vector<int>& file_trials) {
    if (m.family_kind == "bernoulli") return ResponseFamily::bernoulli();
    if (m.family_kind == "normal") return ResponseFamily::normal(m.sigma);
    if (m.family_kind == "binomial") {
        if (!file_trials.empty()) return ResponseFamily::binomial(file_trials);
        if (m.uniform_trials) return ResponseFamily::binomial_uniform(*m.uniform_trials, m.n);
        throw ValidationError("binomial manifest needs a trials column or uniform_trials");
    }
    throw ValidationError("unknown family '" + m.family_kind + "'");
}

struct ResponseData {
    Eigen::VectorXd y;
    std::vector<int> trials;  // empty when the file has no trials column
};

ResponseData read_responses(const std::filesystem::path& path, int n) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open response file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");

    std::string header = line;
    while (!header.empty() && (header.back() == '\r' || header.back() == '\n')) header.pop_back();
    bool with_trials;
    if (header == "sample,y") {
        with_trials = false;
    } else if (header == "sample,y,trials") {
        with_trials = true;
    } else {
        throw ParseError(path.string() + ":1: expected header 'sample,y[,trials]', got '" + header + "'");
    }

    ResponseData out;
    out.y.resize(n);
    if (with_trials) out.trials.resize(n);
    std::vector<bool> seen(n, false);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != (with_trials ? 3u : 2u)) parse_fail(path, lineno, "wrong field count");
        const long i = parse_long(f[0], path, lineno);
        if (i < 0 || i >= n) parse_fail(path, lineno, "sample index " + f[0] + " out of range");
        if (seen[i]) parse_fail(path, lineno, "duplicate sample " + f[0]);
        seen[i] = true;
        out.y[static_cast<int>(i)] = parse_double(f[1], path, lineno);
        if (with_trials) out.trials[static_cast<size_t>(i)] =
            static_cast<int>(parse_long(f[2], path, lineno));
    }
    for (int i = 0; i < n; ++i)
        if (!seen[i]) throw ParseError(path.string() + ": missing response for sample " +
                                       std::to_string(i));
    return out;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

DataManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }

    DataManifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        m.n = j.at("dims").at("n").get<int>();
        m.s = j.at("dims").at("s").get<int>();
        m.t = j.at("dims").at("t").get<int>();
        const json& fam = j.at("family");
        m.family_kind = fam.at("kind").get<std::string>();
        if (fam.contains("sigma")) m.sigma = fam.at("sigma").get<double>();
        if (fam.contains("trials")) m.uniform_trials = fam.at("trials").get<int>();
        m.predictor_file = j.at("predictor_file").get<std::string>();
        m.response_file = j.at("response_file").get<std::string>();
        if (j.contains("labels")) {
            const json& labels = j.at("labels");
            if (labels.contains("rows"))
                m.row_labels = labels.at("rows").get<std::vector<std::string>>();
            if (labels.contains("cols"))
                m.col_labels = labels.at("cols").get<std::vector<std::string>>();
        }
    } catch (const json::exception& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
    if (m.format_version != 1)
        throw ValidationError("unsupported manifest format_version " +
                              std::to_string(m.format_version));
    if (m.n < 1 || m.s < 1 || m.t < 1)
        throw ValidationError("manifest dims must be positive");

    const std::filesystem::path base = path.parent_path();
    m.predictor_file = resolve(base, m.predictor_file);
    m.response_file = resolve(base, m.response_file);
    return m;
}

void save_manifest(const DataManifest& m, const std::filesystem::path& path) {
    json j;
    j["format_version"] = m.format_version;
    j["dims"] = {{"n", m.n}, {"s", m.s}, {"t", m.t}};
    json fam;
    fam["kind"] = m.family_kind;
    if (m.family_kind == "normal") fam["sigma"] = m.sigma;
    if (m.uniform_trials) fam["trials"] = *m.uniform_trials;
    j["family"] = fam;
    j["predictor_file"] = m.predictor_file.string();
    j["response_file"] = m.response_file.string();
    if (!m.row_labels.empty() || !m.col_labels.empty())
        j["labels"] = {{"rows", m.row_labels}, {"cols", m.col_labels}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
}

DataSet ingest(const DataManifest& manifest) {
    const std::filesystem::path& path = manifest.predictor_file;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open predictor file " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    expect_header(line, "sample,row,col,value", path);

    const int n = manifest.n, s = manifest.s, t = manifest.t;
    std::vector<Eigen::MatrixXd> X(n, Eigen::MatrixXd::Zero(s, t));
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(s * t, false));

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 4) parse_fail(path, lineno, "wrong field count");
        const long i = parse_long(f[0], path, lineno);
        const long row = parse_long(f[1], path, lineno);
        const long col = parse_long(f[2], path, lineno);
        if (i < 0 || i >= n) parse_fail(path, lineno, "sample index " + f[0] + " out of range");
        if (row < 0 || row >= s) parse_fail(path, lineno, "row index " + f[1] + " out of range");
        if (col < 0 || col >= t) parse_fail(path, lineno, "col index " + f[2] + " out of range");
        const int cell = static_cast<int>(row) * t + static_cast<int>(col);
        if (seen[i][cell])
            parse_fail(path, lineno, "duplicate cell (" + f[0] + "," + f[1] + "," + f[2] + ")");
        seen[i][cell] = true;
        X[i](row, col) = parse_double(f[3], path, lineno);
    }
    for (int i = 0; i < n; ++i)
        for (int cell = 0; cell < s * t; ++cell)
            if (!seen[i][cell])
                throw ParseError(path.string() + ": missing cell (" + std::to_string(i) + "," +
                                 std::to_string(cell / t) + "," + std::to_string(cell % t) + ")");

    const ResponseData resp = read_responses(manifest.response_file, n);

    DataSet data;
    data.X = std::move(X);
    data.y = resp.y;
    data.family = family_from_manifest(manifest, resp.trials);
    data.validate();
    return data;
}

DataSet ingest_profiles(const std::filesystem::path& profile_file, const DataManifest& manifest) {
    std::ifstream in(profile_file);
    if (!in) throw ParseError("cannot open profile file " + profile_file.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(profile_file.string() + ": empty file");
    expect_header(line, "sample,row,col,position,value", profile_file);

    const int n = manifest.n, s = manifest.s, t = manifest.t;
    std::vector<Eigen::MatrixXd> sums(n, Eigen::MatrixXd::Zero(s, t));
    std::vector<Eigen::MatrixXi> counts(n, Eigen::MatrixXi::Zero(s, t));

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 5) parse_fail(profile_file, lineno, "wrong field count");
        const long i = parse_long(f[0], profile_file, lineno);
        const long row = parse_long(f[1], profile_file, lineno);
        const long col = parse_long(f[2], profile_file, lineno);
        if (i < 0 || i >= n) parse_fail(profile_file, lineno, "sample index out of range");
        if (row < 0 || row >= s) parse_fail(profile_file, lineno, "row index out of range");
        if (col < 0 || col >= t) parse_fail(profile_file, lineno, "col index out of range");
        sums[i](row, col) += parse_double(f[4], profile_file, lineno);
        counts[i](row, col) += 1;
    }

    DataSet data;
    data.X.assign(n, Eigen::MatrixXd(s, t));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < s; ++j)
            for (int k = 0; k < t; ++k) {
                if (counts[i](j, k) == 0)
                    throw ParseError(profile_file.string() + ": no profile points for cell (" +
                                     std::to_string(i) + "," + std::to_string(j) + "," +
                                     std::to_string(k) + ")");
                data.X[i](j, k) = sums[i](j, k) / counts[i](j, k);
            }
    }

    const ResponseData resp = read_responses(manifest.response_file, n);
    data.y = resp.y;
    data.family = family_from_manifest(manifest, resp.trials);
    data.validate();
    return data;
}

void export_dataset(const DataSet& data, const std::filesystem::path& predictor_file,
                    const std::filesystem::path& response_file) {
    data.validate();
    {
        std::ofstream out(predictor_file);
        if (!out) throw Error("cannot write " + predictor_file.string());
        out << "sample,row,col,value\n";
        for (int i = 0; i < data.n(); ++i)
            for (int j = 0; j < data.s(); ++j)
                for (int k = 0; k < data.t(); ++k)
                    out << i << ',' << j << ',' << k << ',' << format_number(data.X[i](j, k))
                        << '\n';
    }
    {
        std::ofstream out(response_file);
        if (!out) throw Error("cannot write " + response_file.string());
        const bool with_trials = data.family.kind == Family::Binomial;
        out << (with_trials ? "sample,y,trials\n" : "sample,y\n");
        for (int i = 0; i < data.n(); ++i) {
            out << i << ',' << format_number(data.y[i]);
            if (with_trials) out << ',' << data.family.trials[i];
            out << '\n';
        }
    }
}

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path,
                       const std::string& config_json) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    if (!config_json.empty()) out << "# config " << config_json << "\n";
    out << "scenario,method,n,nsr,tp,tn,fp,fn,accuracy_mean,accuracy_sd\n";
    for (const ResultRow& r : rows) {
        out << r.scenario << ',' << r.method << ',' << r.n << ',' << format_number(r.nsr) << ','
            << format_number(r.tp) << ',' << format_number(r.tn) << ',' << format_number(r.fp)
            << ',' << format_number(r.fn) << ',' << format_number(r.accuracy_mean) << ','
            << format_number(r.accuracy_sd) << '\n';
    }
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            expect_header(line, "scenario,method,n,nsr,tp,tn,fp,fn,accuracy_mean,accuracy_sd",
                          path);
            header_seen = true;
            continue;
        }
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 10) parse_fail(path, lineno, "wrong field count");
        ResultRow r;
        r.scenario = f[0];
        r.method = f[1];
        r.n = static_cast<int>(parse_long(f[2], path, lineno));
        r.nsr = parse_double(f[3], path, lineno);
        r.tp = parse_double(f[4], path, lineno);
        r.tn = parse_double(f[5], path, lineno);
        r.fp = parse_double(f[6], path, lineno);
        r.fn = parse_double(f[7], path, lineno);
        r.accuracy_mean = parse_double(f[8], path, lineno);
        r.accuracy_sd = parse_double(f[9], path, lineno);
        rows.push_back(std::move(r));
    }
    if (!header_seen) throw ParseError(path.string() + ": missing header");
    return rows;
}

void write_results_table(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << std::left << std::setw(22) << "Scenario" << std::setw(12) << "Method" << std::right
        << std::setw(6) << "n" << std::setw(7) << "NSR" << std::setw(9) << "TP" << std::setw(9)
        << "TN" << std::setw(9) << "FP" << std::setw(9) << "FN" << std::setw(18)
        << "Accuracy (SD)" << "\n";
    out << std::string(101, '-') << "\n";
    std::ostringstream acc;
    for (const ResultRow& r : rows) {
        acc.str("");
        acc << std::fixed << std::setprecision(1) << r.accuracy_mean << " (" << std::setprecision(2)
            << r.accuracy_sd << ")";
        out << std::left << std::setw(22) << r.scenario << std::setw(12) << r.method << std::right
            << std::setw(6) << r.n << std::setw(7) << std::fixed << std::setprecision(2) << r.nsr
            << std::setw(9) << std::setprecision(1) << r.tp << std::setw(9) << r.tn << std::setw(9)
            << r.fp << std::setw(9) << r.fn << std::setw(18) << acc.str() << "\n";
    }
}

void write_rates_csv(const SelectionRates& rates, const DataManifest& manifest,
                     const std::filesystem::path& path, const std::string& config_json) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    if (!config_json.empty()) out << "# config " << config_json << "\n";
    out << "axis,index,label,rate_pct,important\n";
    const double cut = rates.threshold * 100.0;
    for (size_t j = 0; j < rates.row_rates.size(); ++j) {
        const std::string label =
            j < manifest.row_labels.size() ? manifest.row_labels[j] : "row_" + std::to_string(j);
        out << "row," << j << ',' << label << ',' << format_number(rates.row_rates[j]) << ','
            << (rates.row_rates[j] > cut ? 1 : 0) << '\n';
    }
    for (size_t k = 0; k < rates.col_rates.size(); ++k) {
        const std::string label =
            k < manifest.col_labels.size() ? manifest.col_labels[k] : "col_" + std::to_string(k);
        out << "col," << k << ',' << label << ',' << format_number(rates.col_rates[k]) << ','
            << (rates.col_rates[k] > cut ? 1 : 0) << '\n';
    }
}

SelectionRates resample_selection(const DataSet& data, const SelectOptions& opts, int repeats,
                                  int subsample, std::uint64_t seed) {
    data.validate();
    if (repeats < 1) throw ValidationError("resample repeats must be >= 1");
    if (subsample < 1 || subsample > data.n())
        throw ValidationError("subsample size must be in [1, n]");

    SelectionRates rates;
    rates.repeats = repeats;
    rates.row_rates.assign(data.s(), 0.0);
    rates.col_rates.assign(data.t(), 0.0);

    std::vector<int> indices(data.n());
    std::iota(indices.begin(), indices.end(), 0);

    for (int rep = 0; rep < repeats; ++rep) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(rep)};
        std::mt19937_64 rng(seq);
        std::vector<int> picked = indices;
        std::shuffle(picked.begin(), picked.end(), rng);
        picked.resize(subsample);

        DataSet sub;
        sub.family = data.family;
        if (data.family.kind == Family::Binomial) {
            sub.family.trials.clear();
            for (int i : picked) sub.family.trials.push_back(data.family.trials[i]);
        }
        sub.y.resize(subsample);
        sub.X.reserve(subsample);
        for (int a = 0; a < subsample; ++a) {
            sub.X.push_back(data.X[picked[a]]);
            sub.y[a] = data.y[picked[a]];
        }

        const SelectionReport report = select(sub, opts);
        for (int j : report.active_rows) rates.row_rates[j] += 1.0;
        for (int k : report.active_cols) rates.col_rates[k] += 1.0;
    }

    for (double& r : rates.row_rates) r *= 100.0 / repeats;
    for (double& r : rates.col_rates) r *= 100.0 / repeats;
    return rates;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (int j = 0; j < M.rows(); ++j) {
        json row = json::array();
        for (int k = 0; k < M.cols(); ++k) row.push_back(M(j, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void write_fit_report(const FitResult& fit, const std::string& config_json,
                      const std::filesystem::path& path) {
    json j;
    if (!config_json.empty()) j["config"] = json::parse(config_json);
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["objective"] = fit.objective_trace.back();
    j["beta"] = fit.model.beta;
    j["U"] = matrix_to_json(fit.model.U);
    j["V"] = matrix_to_json(fit.model.V);
    j["B"] = matrix_to_json(fit.B);
    j["objective_trace"] = fit.objective_trace;
    j["q_trace"] = fit.q_trace;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_selection_report(const SelectionReport& report, const std::string& config_json,
                            const std::filesystem::path& path) {
    json j;
    if (!config_json.empty()) j["config"] = json::parse(config_json);
    j["chosen_rank"] = report.chosen_rank;
    j["chosen_lambda"] = report.chosen_lambda;
    j["active_rows"] = report.active_rows;
    j["active_cols"] = report.active_cols;
    j["B_hat"] = matrix_to_json(report.B_hat);
    j["beta"] = report.fit.model.beta;
    j["converged"] = report.fit.converged;
    j["iterations"] = report.fit.iterations;
    json table = json::array();
    for (const ICEntry& e : report.ic_table) {
        table.push_back({{"rank", e.rank},
                         {"lambda", e.lambda},
                         {"nll", e.nll},
                         {"df", e.df},
                         {"ic", e.ic},
                         {"ok", e.ok}});
    }
    j["ic_table"] = std::move(table);
    j["warnings"] = report.warnings;
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace matreg
