#pragma once

#include <stdexcept>
#include <string>

namespace flsim {

// Base class for every error thrown by this library.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector operands disagree on length.
class dimension_error : public error {
public:
    using error::error;
};

// An operation that needs a nonzero-norm vector received a zero one.
class degenerate_vector_error : public error {
public:
    using error::error;
};

// Aggregation had nothing left to average. The reason distinguishes
// "no client updates at all", "every client was filtered out", and
// "survivors exist but their weights sum to zero".
class empty_aggregate_error : public error {
public:
    enum class reason { no_clients, all_filtered, zero_scores };

    empty_aggregate_error(reason r, const std::string& msg) : error(msg), reason_(r) {}
    reason why() const noexcept { return reason_; }

private:
    reason reason_;
};

// A rule's stated precondition does not hold (e.g. Krum's n > 2f + 2).
class precondition_error : public error {
public:
    using error::error;
};

// Bad or missing configuration (unknown rule name, missing parameter, ...).
class config_error : public error {
public:
    using error::error;
};

// A file's layout is not what the format requires (bad magic, bad dims).
class format_error : public error {
public:
    using error::error;
};

// Two related files disagree (e.g. image count != label count).
class consistency_error : public error {
public:
    using error::error;
};

// Underlying I/O failed or a file was truncated.
class io_error : public error {
public:
    using error::error;
};

// Sampling could not be completed (required class exhausted).
class sampling_error : public error {
public:
    using error::error;
};

// An attack could not be constructed (e.g. zero-norm deviation vector).
class degenerate_attack_error : public error {
public:
    using error::error;
};

} // namespace flsim
