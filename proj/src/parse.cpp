#include "kms/parse.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace kms {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

GraphSource make_generator(const std::string& body, int line) {
    auto toks = split_ws(body);
    if (toks.empty()) throw ParseError(line, "empty generator spec");
    std::string name = toks[0];
    std::map<std::string, std::string> params;
    ArithmeticMode mode = ArithmeticMode::Float;
    for (std::size_t i = 1; i < toks.size(); ++i) {
        auto eq = toks[i].find('=');
        if (eq == std::string::npos)
            throw ParseError(line, "generator parameter must be key=value, got '" + toks[i] + "'");
        std::string key = toks[i].substr(0, eq);
        std::string val = toks[i].substr(eq + 1);
        if (key == "mode") {
            if (val == "exact")
                mode = ArithmeticMode::Exact;
            else if (val == "float")
                mode = ArithmeticMode::Float;
            else
                throw ParseError(line, "mode must be exact or float");
            continue;
        }
        if (params.count(key)) throw ParseError(line, "duplicate parameter '" + key + "'");
        params[key] = val;
    }
    auto& reg = GeneratorRegistry::instance();
    if (!reg.has_family(name)) throw ParseError(line, "unknown generator family: '" + name + "'");
    try {
        return GraphSource(reg.make(name, params), mode);
    } catch (const std::invalid_argument& e) {
        throw ParseError(line, e.what());
    }
}

}  // namespace

GraphSource parse_generator_spec(const std::string& spec) {
    std::string body = strip(spec);
    if (body.rfind("gen:", 0) == 0) body = body.substr(4);
    return make_generator(body, 1);
}

GraphSource parse_graph(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;

    // Leading blank lines are tolerated before the header.
    std::string header;
    while (std::getline(is, line)) {
        ++lineno;
        header = strip(line);
        if (!header.empty()) break;
    }
    if (header.empty()) throw ParseError(lineno == 0 ? 1 : lineno, "empty document");

    if (header.rfind("gen:", 0) == 0) {
        GraphSource g = make_generator(header.substr(4), lineno);
        while (std::getline(is, line)) {
            ++lineno;
            if (!strip(line).empty())
                throw ParseError(lineno, "generator documents are a single line");
        }
        return g;
    }

    if (header != "kmsgraph v1")
        throw ParseError(lineno, "expected header 'kmsgraph v1' or 'gen:NAME ...'");

    ArithmeticMode mode = ArithmeticMode::Exact;
    bool in_edges = false;
    bool saw_edges_section = false;
    FiniteGraph g;

    while (std::getline(is, line)) {
        ++lineno;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.rfind("[mode]", 0) == 0) {
            if (saw_edges_section) throw ParseError(lineno, "[mode] must precede [edges]");
            std::string m = strip(s.substr(6));
            if (m == "exact")
                mode = ArithmeticMode::Exact;
            else if (m == "float")
                mode = ArithmeticMode::Float;
            else
                throw ParseError(lineno, "mode must be exact or float");
            continue;
        }
        if (s == "[edges]") {
            in_edges = true;
            saw_edges_section = true;
            continue;
        }
        if (s[0] == '[') throw ParseError(lineno, "unknown section '" + s + "'");
        if (!in_edges) throw ParseError(lineno, "edge line outside [edges] section");
        auto toks = split_ws(s);
        if (toks.size() != 3)
            throw ParseError(lineno, "edge line must be 'SRC DST WEIGHT'");
        Rational w;
        try {
            w = parse_rational(toks[2]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
        try {
            g.add_edge(VertexId(toks[0]), VertexId(toks[1]), w);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
    }
    if (!saw_edges_section) throw ParseError(lineno, "missing [edges] section");
    if (g.vertex_count() == 0) throw ParseError(lineno, "graph has no vertices");
    return GraphSource(std::move(g), mode);
}

std::map<VertexId, Rational> parse_vector_document(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<VertexId, Rational> out;
    while (std::getline(is, line)) {
        ++lineno;
        std::string s = strip(line);
        if (s.empty() || s[0] == '#') continue;
        auto toks = split_ws(s);
        if (toks.size() != 2) throw ParseError(lineno, "vector line must be 'VERTEX VALUE'");
        Rational v;
        try {
            v = parse_rational(toks[1]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
        if (v < 0) throw ParseError(lineno, "vector values must be >= 0");
        if (!out.emplace(VertexId(toks[0]), v).second)
            throw ParseError(lineno, "duplicate vertex '" + toks[0] + "'");
    }
    return out;
}

namespace {
std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}
}  // namespace

GraphSource load_graph_file(const std::string& path) { return parse_graph(read_file(path)); }

std::map<VertexId, Rational> load_vector_file(const std::string& path) {
    return parse_vector_document(read_file(path));
}

}  // namespace kms
