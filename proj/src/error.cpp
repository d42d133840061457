#include "coke/error.hpp"

namespace coke {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
    std::string out = "invalid configuration (" + std::to_string(v.size()) + " problem" +
                      (v.size() == 1 ? "" : "s") + ")";
    for (const auto& s : v) {
        out += "\n  - ";
        out += s;
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

IoError::IoError(const std::string& path, const std::string& what)
    : Error(path + ": " + what), path_(path) {}

ProbeError::ProbeError(std::string question_id, const std::string& what)
    : Error("question " + question_id + ": " + what), question_id_(std::move(question_id)) {}

TrainingFailure::TrainingFailure(long last_good_step, const std::string& what)
    : Error(what + " (last good step " + std::to_string(last_good_step) + ")"),
      last_good_step_(last_good_step) {}

}  // namespace coke
