#include "forcedmech/systemfile.hpp"

#include "forcedmech/errors.hpp"
#include "forcedmech/parse.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

namespace fm {

namespace {

struct RawLine {
    int number;
    std::string text; // comment-stripped, untrimmed so columns stay exact
};

struct Section {
    std::string name;
    int line;
    std::vector<RawLine> lines;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

std::vector<Section> split_sections(const std::string& text) {
    std::vector<Section> out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::size_t cut = line.find_first_of("#;");
        std::string body = cut == std::string::npos ? line : line.substr(0, cut);
        std::string t = trim(body);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ParseError("malformed section header", number, 1);
            out.push_back({trim(t.substr(1, t.size() - 2)), number, {}});
            continue;
        }
        if (out.empty())
            throw ParseError("content before the first [section] header", number, 1);
        out.back().lines.push_back({number, body});
    }
    return out;
}

struct KeyValue {
    std::string key;
    std::string value; // raw text after '='
    int offset;        // column offset of `value` within the line
    int line;
};

KeyValue split_key_value(const RawLine& l) {
    std::size_t eq = l.text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'name = value'", l.number, 1);
    std::string key = trim(l.text.substr(0, eq));
    if (!is_identifier(key))
        throw ParseError("'" + key + "' is not a valid name", l.number, 1);
    return {key, l.text.substr(eq + 1), static_cast<int>(eq) + 1, l.number};
}

// Split on '|', keeping each piece's column offset within the line.
std::vector<std::pair<std::string, int>> split_components(const std::string& value, int offset) {
    std::vector<std::pair<std::string, int>> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t bar = value.find('|', start);
        std::string piece =
            bar == std::string::npos ? value.substr(start) : value.substr(start, bar - start);
        out.emplace_back(piece, offset + static_cast<int>(start));
        if (bar == std::string::npos) return out;
        start = bar + 1;
    }
}

double constant_value(const std::string& text, int line, int offset, const char* what) {
    SymbolTable empty;
    Expr e = simplify(parse_expression(text, empty, line, offset));
    if (!e.is_constant()) throw ParseError(std::string(what) + " must be a constant", line, offset + 1);
    return rational_to_double(e.constant_value());
}

Expr parse_section_expression(const Section& sec, const SymbolTable& table) {
    if (sec.lines.empty())
        throw ParseError("empty [" + sec.name + "] section", sec.line, 1);
    if (sec.lines.size() == 1)
        return parse_expression(sec.lines[0].text, table, sec.lines[0].number, 0);
    std::string joined;
    for (const RawLine& l : sec.lines) joined += l.text + " ";
    return parse_expression(joined, table, sec.lines[0].number, 0);
}

void check_declared_name(const std::string& name, int line, int col,
                         const std::set<std::string>& taken) {
    if (!is_identifier(name))
        throw ParseError("'" + name + "' is not a valid name", line, col);
    if (is_reserved_word(name) || name == "t")
        throw ParseError("'" + name + "' is reserved", line, col);
    if (name.rfind("qd_", 0) == 0)
        throw ParseError("names must not start with 'qd_' (velocities are implicit)", line, col);
    if (taken.count(name)) throw ParseError("duplicate name '" + name + "'", line, col);
}

void read_coordinates(const Section& sec, SystemFile& out) {
    std::set<std::string> taken;
    for (const RawLine& l : sec.lines) {
        std::size_t i = 0;
        while (i < l.text.size()) {
            char c = l.text[i];
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
                ++i;
                continue;
            }
            std::size_t start = i;
            while (i < l.text.size() && !std::isspace(static_cast<unsigned char>(l.text[i])) &&
                   l.text[i] != ',')
                ++i;
            std::string name = l.text.substr(start, i - start);
            check_declared_name(name, l.number, static_cast<int>(start) + 1, taken);
            taken.insert(name);
            out.coordinates.push_back(name);
        }
    }
    if (out.coordinates.empty())
        throw ParseError("empty [coordinates] section", sec.line, 1);
}

void read_parameters(const Section& sec, SystemFile& out) {
    std::set<std::string> taken;
    for (const std::string& c : out.coordinates) {
        taken.insert(c);
        taken.insert("qd_" + c);
    }
    for (const RawLine& l : sec.lines) {
        KeyValue kv = split_key_value(l);
        check_declared_name(kv.key, kv.line, 1, taken);
        taken.insert(kv.key);
        out.parameters.emplace_back(kv.key,
                                    constant_value(kv.value, kv.line, kv.offset, "parameter value"));
    }
}

void read_force(const Section& sec, const SymbolTable& table, SystemFile& out) {
    for (const RawLine& l : sec.lines)
        out.force.push_back(parse_expression(l.text, table, l.number, 0));
    if (out.force.size() != out.coordinates.size())
        throw ParseError("expected " + std::to_string(out.coordinates.size()) +
                             " force components (one per coordinate), got " +
                             std::to_string(out.force.size()),
                         sec.line, 1);
    out.has_force = true;
}

void read_candidates(const Section& sec, const SymbolTable& table, SystemFile& out) {
    std::size_t n = out.coordinates.size();
    std::set<std::string> taken;
    for (const RawLine& l : sec.lines) {
        KeyValue kv = split_key_value(l);
        if (taken.count(kv.key))
            throw ParseError("duplicate name '" + kv.key + "'", kv.line, 1);
        taken.insert(kv.key);
        CandidateField field;
        field.name = kv.key;
        std::vector<std::pair<std::string, int>> pieces = split_components(kv.value, kv.offset);
        for (const auto& [piece, offset] : pieces)
            field.components.push_back(parse_expression(piece, table, kv.line, offset));
        if (field.components.size() != n && field.components.size() != 2 * n)
            throw ParseError("a candidate needs " + std::to_string(n) + " components (on Q) or " +
                                 std::to_string(2 * n) + " (on TQ), got " +
                                 std::to_string(field.components.size()),
                             kv.line, 1);
        if (field.components.size() == n)
            for (std::size_t i = 0; i < n; ++i)
                if (field.components[i].depends_on_kind(SymbolKind::Velocity))
                    throw ParseError("a configuration-space field cannot reference velocities",
                                     kv.line, pieces[i].second + 1);
        out.candidates.push_back(std::move(field));
    }
    if (out.candidates.empty())
        throw ParseError("empty [candidates] section", sec.line, 1);
}

void read_action(const Section& sec, const SymbolTable& table, SystemFile& out) {
    std::size_t n = out.coordinates.size();
    ActionSpec spec;
    struct StructureEntry {
        int a, b, d, line, offset;
        Rational value;
    };
    std::vector<StructureEntry> entries;
    for (const RawLine& l : sec.lines) {
        KeyValue kv = split_key_value(l);
        if (kv.key == "generator") {
            std::vector<Expr> comps;
            std::vector<std::pair<std::string, int>> pieces = split_components(kv.value, kv.offset);
            for (const auto& [piece, offset] : pieces)
                comps.push_back(parse_expression(piece, table, kv.line, offset));
            if (comps.size() != n)
                throw ParseError("a generator needs " + std::to_string(n) + " components, got " +
                                     std::to_string(comps.size()),
                                 kv.line, 1);
            for (std::size_t i = 0; i < n; ++i)
                if (comps[i].depends_on_kind(SymbolKind::Velocity))
                    throw ParseError("a generator cannot reference velocities", kv.line,
                                     pieces[i].second + 1);
            spec.generators.push_back(std::move(comps));
        } else if (kv.key == "structure") {
            std::istringstream in(kv.value);
            std::string sa, sb, sd, sr, extra;
            if (!(in >> sa >> sb >> sd >> sr) || (in >> extra))
                throw ParseError("expected 'structure = a b d value'", kv.line, 1);
            StructureEntry e;
            try {
                std::size_t used;
                e.a = std::stoi(sa, &used);
                if (used != sa.size()) throw std::invalid_argument(sa);
                e.b = std::stoi(sb, &used);
                if (used != sb.size()) throw std::invalid_argument(sb);
                e.d = std::stoi(sd, &used);
                if (used != sd.size()) throw std::invalid_argument(sd);
            } catch (const std::exception&) {
                throw ParseError("structure indices must be integers", kv.line, kv.offset + 1);
            }
            SymbolTable empty;
            Expr v = simplify(parse_expression(sr, empty, kv.line, kv.offset));
            if (!v.is_constant())
                throw ParseError("structure constants must be rational", kv.line, kv.offset + 1);
            e.value = v.constant_value();
            e.line = kv.line;
            e.offset = kv.offset;
            entries.push_back(e);
        } else {
            throw ParseError("unknown [action] entry '" + kv.key + "'", kv.line, 1);
        }
    }
    if (spec.generators.empty())
        throw ParseError("[action] needs at least one generator", sec.line, 1);
    int m = static_cast<int>(spec.generators.size());
    spec.structure.assign(m, std::vector<std::vector<Rational>>(m, std::vector<Rational>(m, Rational(0))));
    std::set<std::array<int, 3>> assigned;
    for (const StructureEntry& e : entries) {
        if (e.a < 1 || e.a > m || e.b < 1 || e.b > m || e.d < 1 || e.d > m)
            throw ParseError("structure index out of range (the action has " + std::to_string(m) +
                                 " generators)",
                             e.line, e.offset + 1);
        if (e.a == e.b && e.value != 0)
            throw ParseError("structure constants are antisymmetric: c^d_aa must vanish", e.line,
                             e.offset + 1);
        std::array<int, 3> key{e.a, e.b, e.d};
        std::array<int, 3> mirror{e.b, e.a, e.d};
        if (assigned.count(key) || assigned.count(mirror))
            throw ParseError("structure constant for (" + std::to_string(e.a) + ", " +
                                 std::to_string(e.b) + ", " + std::to_string(e.d) +
                                 ") given twice",
                             e.line, e.offset + 1);
        assigned.insert(key);
        spec.structure[e.a - 1][e.b - 1][e.d - 1] = e.value;
        spec.structure[e.b - 1][e.a - 1][e.d - 1] = -e.value;
    }
    out.action = std::move(spec);
}

void read_integration(const Section& sec, SystemFile& out) {
    IntegrationSpec spec;
    bool has_h = false, has_t = false, has_state = false;
    for (const RawLine& l : sec.lines) {
        KeyValue kv = split_key_value(l);
        if (kv.key == "h") {
            if (has_h) throw ParseError("duplicate key 'h'", kv.line, 1);
            spec.h = constant_value(kv.value, kv.line, kv.offset, "h");
            has_h = true;
        } else if (kv.key == "T") {
            if (has_t) throw ParseError("duplicate key 'T'", kv.line, 1);
            spec.T = constant_value(kv.value, kv.line, kv.offset, "T");
            has_t = true;
        } else if (kv.key == "state") {
            if (has_state) throw ParseError("duplicate key 'state'", kv.line, 1);
            std::size_t start = 0;
            const std::string& v = kv.value;
            std::vector<std::pair<std::string, int>> tokens;
            for (std::size_t i = 0; i <= v.size(); ++i) {
                if (i == v.size() || v[i] == ',' || std::isspace(static_cast<unsigned char>(v[i]))) {
                    if (i > start) tokens.emplace_back(v.substr(start, i - start),
                                                       kv.offset + static_cast<int>(start));
                    start = i + 1;
                }
            }
            for (const auto& [tok, offset] : tokens)
                spec.state.push_back(constant_value(tok, kv.line, offset, "state entry"));
            if (spec.state.size() != 2 * out.coordinates.size())
                throw ParseError("expected " + std::to_string(2 * out.coordinates.size()) +
                                     " initial values (coordinates then velocities), got " +
                                     std::to_string(spec.state.size()),
                                 kv.line, 1);
            has_state = true;
        } else {
            throw ParseError("unknown [integration] entry '" + kv.key + "'", kv.line, 1);
        }
    }
    if (!has_h || !has_t || !has_state)
        throw ParseError("[integration] needs h, T and state", sec.line, 1);
    out.integration = spec;
}

void read_monitors(const Section& sec, const SymbolTable& table, SystemFile& out) {
    std::set<std::string> taken;
    for (const RawLine& l : sec.lines) {
        KeyValue kv = split_key_value(l);
        if (taken.count(kv.key))
            throw ParseError("duplicate name '" + kv.key + "'", kv.line, 1);
        taken.insert(kv.key);
        out.monitors.push_back({kv.key, parse_expression(kv.value, table, kv.line, kv.offset)});
    }
    if (out.monitors.empty())
        throw ParseError("empty [monitor] section", sec.line, 1);
}

} // namespace

SystemFile parse_system_text(const std::string& text) {
    std::vector<Section> sections = split_sections(text);
    static const std::set<std::string> known = {"coordinates", "parameters", "lagrangian",
                                                "force",       "dissipation", "candidates",
                                                "action",      "integration", "monitor"};
    std::map<std::string, const Section*> by_name;
    for (const Section& s : sections) {
        if (!known.count(s.name))
            throw ParseError("unknown section '" + s.name + "'", s.line, 1);
        if (!by_name.emplace(s.name, &s).second)
            throw ParseError("duplicate section '" + s.name + "'", s.line, 1);
    }
    auto get = [&](const std::string& name) -> const Section* {
        auto it = by_name.find(name);
        return it == by_name.end() ? nullptr : it->second;
    };

    if (!get("coordinates")) throw ParseError("missing [coordinates] section");
    if (!get("lagrangian")) throw ParseError("missing [lagrangian] section");
    if (get("force") && get("dissipation")) {
        const Section* later =
            get("force")->line > get("dissipation")->line ? get("force") : get("dissipation");
        throw ParseError("declare either [force] or [dissipation], not both", later->line, 1);
    }

    SystemFile out;
    read_coordinates(*get("coordinates"), out);
    if (const Section* s = get("parameters")) read_parameters(*s, out);

    // The chart owns symbol naming (velocity of q is the symbol qd); the file
    // syntax writes that velocity as qd_q. Building the chart here also
    // catches residual name collisions such as declaring both x and xd.
    ChartedSystem chart = [&] {
        try {
            return out.chart();
        } catch (const Error& e) {
            throw ParseError(e.what(), get("coordinates")->line, 1);
        }
    }();
    SymbolTable base;
    for (std::size_t i = 0; i < out.coordinates.size(); ++i) {
        base.add(out.coordinates[i], chart.coordinates()[i]);
        base.add("qd_" + out.coordinates[i], chart.velocities()[i]);
    }
    for (const auto& [name, value] : out.parameters)
        base.add(name, Expr::symbol(name, SymbolKind::Parameter));
    SymbolTable with_time = base;
    with_time.add("t", Expr::symbol("t", SymbolKind::Time));

    out.lagrangian = parse_section_expression(*get("lagrangian"), base);
    if (const Section* s = get("force")) read_force(*s, base, out);
    if (const Section* s = get("dissipation")) out.dissipation = parse_section_expression(*s, base);
    if (const Section* s = get("candidates")) read_candidates(*s, base, out);
    if (const Section* s = get("action")) read_action(*s, base, out);
    if (const Section* s = get("integration")) read_integration(*s, out);
    if (const Section* s = get("monitor")) read_monitors(*s, with_time, out);
    return out;
}

SystemFile parse_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open system file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_system_text(buffer.str());
}

ChartedSystem SystemFile::chart() const {
    std::map<std::string, double> params(parameters.begin(), parameters.end());
    return ChartedSystem(coordinates, params);
}

ForcedLagrangianSystem SystemFile::system(std::uint64_t seed) const {
    ChartedSystem c = chart();
    if (dissipation)
        return ForcedLagrangianSystem::from_rayleigh(c, lagrangian, *dissipation, seed);
    if (has_force)
        return ForcedLagrangianSystem(c, lagrangian,
                                      make_semibasic_form(c, force, Side::Lagrangian), seed);
    return ForcedLagrangianSystem(c, lagrangian, zero_force(c), seed);
}

AlgebraAction SystemFile::algebra_action(const ChartedSystem& c, std::uint64_t seed) const {
    if (!action) throw PreconditionError("the system file declares no [action] section");
    std::vector<VectorFieldQ> gens;
    gens.reserve(action->generators.size());
    for (const std::vector<Expr>& comps : action->generators)
        gens.push_back(make_vector_field_q(c, comps));
    return make_algebra_action(c, gens, action->structure, seed);
}

} // namespace fm
