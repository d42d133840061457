#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace coke {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class DegenerateDistribution : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class IoError : public Error {
public:
    IoError(const std::string& path, const std::string& what);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Retryable transport problem talking to a completion endpoint.
class TransportError : public Error {
public:
    using Error::Error;
};

// The endpoint cannot return token log-probabilities. Fatal for a probe run.
class CapabilityError : public Error {
public:
    using Error::Error;
};

class ProbeError : public Error {
public:
    ProbeError(std::string question_id, const std::string& what);
    const std::string& question_id() const noexcept { return question_id_; }

private:
    std::string question_id_;
};

class UndefinedMetric : public Error {
public:
    using Error::Error;
};

class TrainingFailure : public Error {
public:
    TrainingFailure(long last_good_step, const std::string& what);
    long last_good_step() const noexcept { return last_good_step_; }

private:
    long last_good_step_;
};

}  // namespace coke
