#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "matreg/data.hpp"
#include "matreg/selection.hpp"
#include "matreg/simulation.hpp"

namespace matreg {

/// On-disk description of a dataset. Predictor entries live in a long-format
/// CSV `sample,row,col,value` (0-based, dense); responses in `sample,y`
/// with an extra `trials` column for binomial data. Relative paths resolve
/// against the manifest's directory.
struct DataManifest {
    int format_version = 1;
    int n = 0, s = 0, t = 0;
    std::string family_kind = "bernoulli";
    double sigma = 1.0;
    std::optional<int> uniform_trials;  // binomial shorthand when the file has no trials column
    std::filesystem::path predictor_file;
    std::filesystem::path response_file;
    std::vector<std::string> row_labels;  // optional process-variable names
    std::vector<std::string> col_labels;  // optional stage names
};

DataManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DataManifest& manifest, const std::filesystem::path& path);

DataSet ingest(const DataManifest& manifest);

/// Long-format profiles `sample,row,col,position,value`; each cell becomes
/// the mean over its positions, then proceeds as ingest.
DataSet ingest_profiles(const std::filesystem::path& profile_file, const DataManifest& manifest);

/// Writes the dataset back out in the manifest formats at 12 significant digits.
void export_dataset(const DataSet& data, const std::filesystem::path& predictor_file,
                    const std::filesystem::path& response_file);

std::string format_number(double v);  // 12 significant digits

/// One row of the machine-readable study table.
struct ResultRow {
    std::string scenario;
    std::string method;
    int n = 0;
    double nsr = 0.0;
    double tp = 0, tn = 0, fp = 0, fn = 0;
    double accuracy_mean = 0, accuracy_sd = 0;
};

void write_results_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path,
                       const std::string& config_json);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

void write_results_table(const std::vector<ResultRow>& rows, std::ostream& out);

/// Per-group selection rates from resampled runs; rate in [0,100].
struct SelectionRates {
    std::vector<double> row_rates;
    std::vector<double> col_rates;
    int repeats = 0;
    double threshold = 0.5;  // fraction above which a group counts as important
};

void write_rates_csv(const SelectionRates& rates, const DataManifest& manifest,
                     const std::filesystem::path& path, const std::string& config_json);

/// Repeats select() on `repeats` random subsets of `subsample` samples drawn
/// without replacement and reports how often each row/column was selected.
SelectionRates resample_selection(const DataSet& data, const SelectOptions& opts, int repeats,
                                  int subsample, std::uint64_t seed);

void write_fit_report(const FitResult& fit, const std::string& config_json,
                      const std::filesystem::path& path);
void write_selection_report(const SelectionReport& report, const std::string& config_json,
                            const std::filesystem::path& path);

}  // namespace matreg
