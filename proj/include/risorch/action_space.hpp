#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"

namespace risorch {

// Discrete reflection phase states, values[f] = exp(j 2^{1-b} pi f).
struct PhaseSet {
    unsigned resolution_bits = 1;
    std::vector<cxd> values;
};

inline PhaseSet make_phase_set(unsigned bits) {
    if (bits < 1 || bits > 8) throw std::invalid_argument("phase resolution must be 1..8 bits");
    PhaseSet ps;
    ps.resolution_bits = bits;
    const std::size_t count = std::size_t{1} << bits;
    ps.values.reserve(count);
    for (std::size_t f = 0; f < count; ++f) {
        const double phase = std::pow(2.0, 1.0 - static_cast<double>(bits)) * M_PI *
                             static_cast<double>(f);
        ps.values.push_back(cxd{std::cos(phase), std::sin(phase)});
    }
    return ps;
}

// Joint choice of all RIS group phases plus the BS precoding matrix.
struct Action {
    std::uint64_t index = 0;
    std::vector<std::size_t> group_phases;     // N_control phase-set indices, RIS-major
    std::vector<std::size_t> precoder_choice;  // per-UE column choice
    std::vector<CVec> phase_diagonals;         // M vectors of length N (diag of Phi_m)
    CMat precoder;                             // N_T x K, unit-norm columns
};

// The joint discrete action space: phase groups enumerated RIS-major as a
// base-2^b number (first group most significant), then the per-UE precoder
// choices as the least-significant factor.
class ActionSpace {
  public:
    ActionSpace(std::size_t num_ris, std::size_t elements_per_ris, std::size_t n_h,
                std::size_t n_v, std::size_t group_size, unsigned phase_bits,
                std::size_t bs_antennas, std::size_t num_ue)
        : num_ris_(num_ris),
          n_per_ris_(elements_per_ris),
          group_size_(group_size),
          phase_set_(make_phase_set(phase_bits)),
          bs_antennas_(bs_antennas),
          num_ue_(num_ue) {
        if (n_h * n_v != elements_per_ris)
            throw std::invalid_argument("RIS shape does not match element count");
        if (group_size == 0 || elements_per_ris % group_size != 0)
            throw std::invalid_argument("group size must evenly divide the per-RIS element count");
        groups_per_ris_ = elements_per_ris / group_size;
        n_control_ = num_ris * groups_per_ris_;

        // element i = p*n_h + q belongs to the group holding its position in
        // vertical-first (column-major) element order
        group_of_element_.resize(elements_per_ris);
        for (std::size_t p = 0; p < n_v; ++p)
            for (std::size_t q = 0; q < n_h; ++q)
                group_of_element_[p * n_h + q] = (q * n_v + p) / group_size;

        build_precoder_codebook();

        const std::size_t b = phase_set_.values.size();
        std::uint64_t phase_combos = 1;
        for (std::size_t g = 0; g < n_control_; ++g) {
            if (phase_combos > UINT64_MAX / b) throw std::invalid_argument("action space overflow");
            phase_combos *= b;
        }
        phase_combinations_ = phase_combos;
        cardinality_ = phase_combos * precoder_combinations_;
    }

    std::size_t num_ris() const { return num_ris_; }
    std::size_t elements_per_ris() const { return n_per_ris_; }
    std::size_t group_size() const { return group_size_; }
    std::size_t groups_per_ris() const { return groups_per_ris_; }
    std::size_t n_control() const { return n_control_; }
    std::size_t num_ue() const { return num_ue_; }
    std::size_t bs_antennas() const { return bs_antennas_; }
    std::uint64_t cardinality() const { return cardinality_; }
    std::uint64_t precoder_combinations() const { return precoder_combinations_; }
    const PhaseSet& phase_set() const { return phase_set_; }
    std::size_t group_of_element(std::size_t i) const { return group_of_element_[i]; }
    std::size_t choices_per_ue() const { return choices_per_ue_; }
    // column from the unit-norm DFT codebook available to UE k as choice c
    const CVec& precoder_column(std::size_t k, std::size_t c) const {
        return dft_columns_[k * choices_per_ue_ + c];
    }

    Action decode(std::uint64_t index) const {
        if (index >= cardinality_) throw std::domain_error("action index out of range");
        Action a;
        a.index = index;
        const std::uint64_t phase_int = index / precoder_combinations_;
        std::uint64_t precoder_int = index % precoder_combinations_;

        const std::size_t b = phase_set_.values.size();
        a.group_phases.assign(n_control_, 0);
        std::uint64_t rem = phase_int;
        for (std::size_t g = n_control_; g-- > 0;) {
            a.group_phases[g] = rem % b;
            rem /= b;
        }

        a.precoder_choice.assign(num_ue_, 0);
        for (std::size_t k = num_ue_; k-- > 0;) {
            a.precoder_choice[k] = precoder_int % choices_per_ue_;
            precoder_int /= choices_per_ue_;
        }

        a.phase_diagonals.assign(num_ris_, CVec(n_per_ris_));
        for (std::size_t m = 0; m < num_ris_; ++m)
            for (std::size_t i = 0; i < n_per_ris_; ++i)
                a.phase_diagonals[m][i] =
                    phase_set_.values[a.group_phases[m * groups_per_ris_ + group_of_element_[i]]];

        a.precoder = CMat(bs_antennas_, num_ue_);
        for (std::size_t k = 0; k < num_ue_; ++k) {
            const CVec& col = precoder_column(k, a.precoder_choice[k]);
            for (std::size_t j = 0; j < bs_antennas_; ++j) a.precoder(j, k) = col[j];
        }
        return a;
    }

    std::uint64_t encode(const std::vector<std::size_t>& group_phases,
                         const std::vector<std::size_t>& precoder_choice) const {
        if (group_phases.size() != n_control_ || precoder_choice.size() != num_ue_)
            throw std::domain_error("encode: wrong field sizes");
        const std::size_t b = phase_set_.values.size();
        std::uint64_t phase_int = 0;
        for (std::size_t g = 0; g < n_control_; ++g) {
            if (group_phases[g] >= b) throw std::domain_error("encode: phase index out of range");
            phase_int = phase_int * b + group_phases[g];
        }
        std::uint64_t precoder_int = 0;
        for (std::size_t k = 0; k < num_ue_; ++k) {
            if (precoder_choice[k] >= choices_per_ue_)
                throw std::domain_error("encode: precoder choice out of range");
            precoder_int = precoder_int * choices_per_ue_ + precoder_choice[k];
        }
        return phase_int * precoder_combinations_ + precoder_int;
    }

  private:
    void build_precoder_codebook() {
        // Columns of the N_T x N_T DFT matrix, normalized to unit norm, split
        // into consecutive blocks so each UE picks from its own block.
        const std::size_t nt = bs_antennas_;
        if (nt % num_ue_ != 0)
            throw std::invalid_argument("precoder codebook: N_T must be divisible by K");
        choices_per_ue_ = nt / num_ue_;
        dft_columns_.reserve(nt);
        const double scale = 1.0 / std::sqrt(static_cast<double>(nt));
        for (std::size_t c = 0; c < nt; ++c) {
            CVec col(nt);
            for (std::size_t r = 0; r < nt; ++r) {
                const double phase = -2.0 * M_PI * static_cast<double>(r * c) /
                                     static_cast<double>(nt);
                col[r] = scale * cxd{std::cos(phase), std::sin(phase)};
            }
            dft_columns_.push_back(std::move(col));
        }
        precoder_combinations_ = 1;
        for (std::size_t k = 0; k < num_ue_; ++k) precoder_combinations_ *= choices_per_ue_;
    }

    std::size_t num_ris_;
    std::size_t n_per_ris_;
    std::size_t group_size_;
    std::size_t groups_per_ris_ = 0;
    std::size_t n_control_ = 0;
    PhaseSet phase_set_;
    std::size_t bs_antennas_;
    std::size_t num_ue_;
    std::size_t choices_per_ue_ = 0;
    std::vector<CVec> dft_columns_;
    std::vector<std::size_t> group_of_element_;
    std::uint64_t phase_combinations_ = 0;
    std::uint64_t precoder_combinations_ = 0;
    std::uint64_t cardinality_ = 0;
};

}  // namespace risorch
