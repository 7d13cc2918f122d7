#pragma once

#include <map>
#include <string>

#include "kms/graph.hpp"

namespace kms {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

/// Parses a graph document.
///
/// Finite tables:
///     kmsgraph v1
///     [mode] exact|float        (optional; default exact)
///     [edges]
///     SRC DST WEIGHT            (weight: decimal or p/q, > 0)
///
/// Generators are a single line: `gen:NAME key=value ...` (default float
/// mode, `mode=exact` overrides).
GraphSource parse_graph(const std::string& text);

/// Parses a `gen:NAME key=value ...` spec (also accepted without the prefix).
GraphSource parse_generator_spec(const std::string& spec);

/// Reads `VERTEX VALUE` lines; blank lines and `#` comments ignored.
std::map<VertexId, Rational> parse_vector_document(const std::string& text);

GraphSource load_graph_file(const std::string& path);
std::map<VertexId, Rational> load_vector_file(const std::string& path);

}  // namespace kms
