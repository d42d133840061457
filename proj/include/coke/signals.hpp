#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace coke {

enum class SignalKind { MinProb, FstProb, ProdProb };

inline constexpr std::array<SignalKind, 3> kAllSignalKinds = {
    SignalKind::MinProb, SignalKind::FstProb, SignalKind::ProdProb};

// "min-prob", "fst-prob", "prod-prob"
std::string_view to_string(SignalKind kind) noexcept;
SignalKind parse_signal_kind(std::string_view text);

// Per-token probabilities of one greedy prediction, in emission order.
struct TokenProbSequence {
    std::vector<double> probs;
    std::vector<std::string> tokens;

    // Throws InvalidInput unless non-empty, equal lengths, and every p in (0, 1].
    void validate() const;

    // Converts endpoint log-probabilities once. Values slightly above zero
    // (endpoint rounding) are clamped to probability 1.
    static TokenProbSequence from_logprobs(std::vector<std::string> tokens,
                                           std::span<const double> logprobs);
};

struct ConfidenceScore {
    double value = 0.0;
    SignalKind kind = SignalKind::MinProb;

    friend bool operator==(const ConfidenceScore&, const ConfidenceScore&) = default;
};

// Indexed by SignalKind.
struct SignalSet {
    std::array<ConfidenceScore, 3> scores{};

    const ConfidenceScore& operator[](SignalKind k) const { return scores[static_cast<int>(k)]; }
    ConfidenceScore& operator[](SignalKind k) { return scores[static_cast<int>(k)]; }

    friend bool operator==(const SignalSet&, const SignalSet&) = default;
};

double compute_signal(std::span<const double> probs, SignalKind kind);
ConfidenceScore compute_signal(const TokenProbSequence& seq, SignalKind kind);
SignalSet compute_all_signals(const TokenProbSequence& seq);

}  // namespace coke
