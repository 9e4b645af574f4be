#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "card/matrix.hpp"
#include "card/rng.hpp"

namespace card {

/// One analysis cohort: covariates, observed response, binary treatment and
/// an optional known propensity column. Immutable after construction; safe
/// to share across threads.
class Dataset {
public:
    Dataset(Matrix x, std::vector<double> y, std::vector<std::uint8_t> t,
            std::optional<std::vector<double>> oracle_propensity = std::nullopt);

    const Matrix& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }
    const std::vector<std::uint8_t>& t() const { return t_; }
    const std::optional<std::vector<double>>& oracle_propensity() const { return oracle_propensity_; }

    std::size_t n() const { return y_.size(); }
    std::size_t p() const { return x_.cols; }

    std::size_t n_treated() const { return n_treated_; }
    std::size_t n_untreated() const { return n() - n_treated_; }

    /// Row indices with t == 1, in dataset order.
    std::vector<std::size_t> treated_indices() const;
    /// Row indices with t == 0, in dataset order.
    std::vector<std::size_t> untreated_indices() const;

private:
    Matrix x_;
    std::vector<double> y_;
    std::vector<std::uint8_t> t_;
    std::optional<std::vector<double>> oracle_propensity_;
    std::size_t n_treated_ = 0;
};

/// Column-name mapping for CSV ingestion. Every column not named here is
/// treated as a covariate, in file order.
struct CsvSchema {
    std::string response = "y";
    std::string treatment = "t";
    std::optional<std::string> propensity;
};

/// Reads a cohort from a headered CSV file. Cells must be plain numerics;
/// missing values are rejected. The treatment column must be 0/1.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Writes a cohort back to CSV with enough precision that load_csv
/// reproduces it bit-exactly for finite values.
void write_csv(const Dataset& d, const std::string& path, const CsvSchema& schema);

/// Index partition used by the knockoff calibration: untreated observations
/// kept for the null class (I0*), untreated observations relabeled as
/// knockoffs (I_ko), and all treated observations (I1).
struct KnockoffSplit {
    std::vector<std::size_t> idx_untreated_train;
    std::vector<std::size_t> idx_knockoff;
    std::vector<std::size_t> idx_treated;
};

/// Samples ceil(fraction * n_untreated) untreated rows uniformly without
/// replacement into the knockoff set. Pure function of (d, fraction, rng state).
KnockoffSplit split_knockoffs(const Dataset& d, double fraction, Rng& rng);

} // namespace card
