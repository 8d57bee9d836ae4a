#pragma once

#include <stdexcept>
#include <string>

namespace strainsim {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed domain values detected at construction.
struct DuplicateResource : Error {
    explicit DuplicateResource(const std::string& name)
        : Error("duplicate entry name: " + name), name(name) {}
    std::string name;
};

struct UnresolvedResource : Error {
    explicit UnresolvedResource(const std::string& name)
        : Error("source references unknown resource: " + name), name(name) {}
    std::string name;
};

struct EmptyMerge : Error {
    EmptyMerge() : Error("merge_dex called with no units") {}
};

struct GenomeMismatch : Error {
    GenomeMismatch() : Error("dex lineage does not match the genome being packaged") {}
};

struct InvalidOp : Error {
    explicit InvalidOp(const std::string& why) : Error("invalid mutation op: " + why) {}
};

struct UnknownStrain : Error {
    explicit UnknownStrain(const std::string& id) : Error("unknown strain: " + id) {}
};

struct UnknownPair : Error {
    UnknownPair(const std::string& from, const std::string& to)
        : Error("no transfer rate for pair " + from + " -> " + to), from(from), to(to) {}
    std::string from, to;
};

struct NonPositiveRate : Error {
    NonPositiveRate(const std::string& from, const std::string& to)
        : Error("measured time does not exceed handshake for pair " + from + " -> " + to) {}
};

struct UnknownRegion : Error {
    explicit UnknownRegion(const std::string& id) : Error("unknown region: " + id) {}
};

struct BudgetExhausted : Error {
    BudgetExhausted() : Error("adversary compromise budget exhausted") {}
};

struct DuplicateLabel : Error {
    explicit DuplicateLabel(const std::string& label)
        : Error("rng stream label already taken: " + label) {}
};

struct ParseError : Error {
    ParseError(const std::string& msg, int line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

struct IncompatibleTraces : Error {
    explicit IncompatibleTraces(const std::string& why)
        : Error("traces are not comparable: " + why) {}
};

}  // namespace strainsim
