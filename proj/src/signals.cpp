#include "coke/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coke/error.hpp"
#include "coke/kernels.hpp"

namespace coke {

namespace {

void check_probs(std::span<const double> probs) {
    if (probs.empty()) throw InvalidInput("token probability sequence is empty");
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p > 0.0 && p <= 1.0))
            throw InvalidInput("token probability " + std::to_string(p) + " at position " +
                               std::to_string(i) + " is outside (0, 1]");
    }
}

// Sequential product in linear space; when it leaves the normal range the
// log-domain sum takes over. An underflowing product is pinned to the
// smallest normal double so the score stays inside (0, 1].
double product(std::span<const double> probs) {
    double prod = 1.0;
    for (double p : probs) prod *= p;
    if (prod >= std::numeric_limits<double>::min()) return prod;

    std::vector<double> logs(probs.size());
    std::transform(probs.begin(), probs.end(), logs.begin(), [](double p) { return std::log(p); });
    return std::max(std::exp(kernels::sum(logs)), std::numeric_limits<double>::min());
}

}  // namespace

std::string_view to_string(SignalKind kind) noexcept {
    switch (kind) {
        case SignalKind::MinProb: return "min-prob";
        case SignalKind::FstProb: return "fst-prob";
        case SignalKind::ProdProb: return "prod-prob";
    }
    return "min-prob";
}

SignalKind parse_signal_kind(std::string_view text) {
    for (SignalKind k : kAllSignalKinds)
        if (to_string(k) == text) return k;
    throw InvalidInput("unknown signal kind '" + std::string(text) +
                       "' (expected min-prob, fst-prob or prod-prob)");
}

void TokenProbSequence::validate() const {
    if (probs.size() != tokens.size())
        throw InvalidInput("token/probability length mismatch: " + std::to_string(tokens.size()) +
                           " tokens, " + std::to_string(probs.size()) + " probabilities");
    check_probs(probs);
}

TokenProbSequence TokenProbSequence::from_logprobs(std::vector<std::string> tokens,
                                                   std::span<const double> logprobs) {
    TokenProbSequence seq;
    seq.tokens = std::move(tokens);
    seq.probs.reserve(logprobs.size());
    for (double lp : logprobs) seq.probs.push_back(std::exp(std::min(lp, 0.0)));
    seq.validate();
    return seq;
}

double compute_signal(std::span<const double> probs, SignalKind kind) {
    check_probs(probs);
    switch (kind) {
        case SignalKind::MinProb: return kernels::min(probs);
        case SignalKind::FstProb: return probs.front();
        case SignalKind::ProdProb: return product(probs);
    }
    throw InvalidInput("unknown signal kind");
}

ConfidenceScore compute_signal(const TokenProbSequence& seq, SignalKind kind) {
    seq.validate();
    return {compute_signal(seq.probs, kind), kind};
}

SignalSet compute_all_signals(const TokenProbSequence& seq) {
    seq.validate();
    SignalSet out;
    for (SignalKind k : kAllSignalKinds) out[k] = {compute_signal(seq.probs, k), k};
    return out;
}

}  // namespace coke
