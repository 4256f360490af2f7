#pragma once

// Generator for board-tiling transition systems over a single total order.
//
// A TileSpec lists tile names plus horizontal and vertical adjacency pairs:
// (a, b) ∈ horizontal allows b immediately right of a, (a, b) ∈ vertical
// allows b immediately below a.  `tiling_source` renders the spec as a model
// whose states are partial tilings of a board.  Coordinates are elements of
// one linear order `le` with least element `zero`; `pred` is its immediate
// predecessor; `last` marks the frontier — the single most recently tiled
// location.  Each action advances the frontier to the next board location in
// row-major order and drops one tile there, guarded so the new tile conforms
// with its left and upper neighbours (looked up existentially through `pred`,
// outside any universal, so every action body stays in the decidable
// exists*-forall* class).  Two board shapes:
//
//   finiteBoard      rows have fixed width `max`; the start tile begins in
//                    the corner and safety says the halt tile never sits at
//                    the end of a row inside the tiled region, so a state
//                    reaching halt there encodes a complete halting tiling.
//   lowerTriangular  row i has columns 0..i and the board grows forever; a
//                    marker relation is dragged along the frontier and the
//                    flag `ok` records whether it survived, so the invariant
//                    stays inductive exactly when the triangle cannot be
//                    tiled completely.
//
// The generated invariant is forall*-exists*: every placed tile strictly
// before the frontier has a conforming successor tile at the next board
// location.  All structural facts about the order are universal axioms, and
// they are restated as initial-state constraints because the initiation
// condition reads inits alone.  The *existence* of predecessors is never
// axiomatized — chaining the board together is the invariant's job.

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bhz/frontend.hpp"

namespace bhz {

struct TileSpec {
    enum class Variant { FiniteBoard, LowerTriangular };

    std::vector<std::string> tiles;
    std::string start; // placed in the corner of a finiteBoard
    std::string halt;  // watched by the finiteBoard safety property
    std::vector<std::pair<std::string, std::string>> horizontal; // (left, right)
    std::vector<std::pair<std::string, std::string>> vertical;   // (upper, lower)
    Variant variant = Variant::FiniteBoard;
};

inline const char* to_cstring(TileSpec::Variant v) {
    return v == TileSpec::Variant::FiniteBoard ? "finiteBoard" : "lowerTriangular";
}

namespace detail_tl {

inline bool identifier_like(const std::string& s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    return true;
}

inline void check_spec(const TileSpec& spec) {
    if (spec.tiles.empty()) throw std::invalid_argument("tile set is empty");
    std::set<std::string> names;
    for (auto& t : spec.tiles) {
        if (!identifier_like(t))
            throw std::invalid_argument("tile name '" + t + "' is not an identifier");
        if (!names.insert(t).second)
            throw std::invalid_argument("duplicate tile name '" + t + "'");
    }
    if (!names.count(spec.start))
        throw std::invalid_argument("start tile '" + spec.start + "' is not in the tile set");
    if (!names.count(spec.halt))
        throw std::invalid_argument("halt tile '" + spec.halt + "' is not in the tile set");
    for (auto* adj : {&spec.horizontal, &spec.vertical})
        for (auto& [a, b] : *adj)
            if (!names.count(a) || !names.count(b))
                throw std::invalid_argument("adjacency pair (" + a + ", " + b +
                                            ") mentions an unknown tile");
}

// Join with `|`; the caller parenthesizes.  An empty choice is unsatisfiable.
inline std::string disj(const std::vector<std::string>& parts) {
    if (parts.empty()) return "false";
    std::string out = parts[0];
    for (size_t i = 1; i < parts.size(); i++) out += " | " + parts[i];
    return out;
}

class SourceBuilder {
public:
    explicit SourceBuilder(const TileSpec& s) : spec(s) {
        tri = spec.variant == TileSpec::Variant::LowerTriangular;
        for (auto& [a, b] : spec.horizontal) {
            insert_once(hnext[a], b);
            insert_once(hpre[b], a);
        }
        for (auto& [a, b] : spec.vertical) insert_once(vpre[b], a);
    }

    std::string build() {
        header();
        vocabulary();
        axioms();
        inits();
        actions();
        invariants();
        return out;
    }

private:
    const TileSpec& spec;
    bool tri = false;
    std::map<std::string, std::vector<std::string>> hnext; // tiles allowed right of key
    std::map<std::string, std::vector<std::string>> hpre;  // tiles allowed left of key
    std::map<std::string, std::vector<std::string>> vpre;  // tiles allowed above key
    std::string out;

    static void insert_once(std::vector<std::string>& v, const std::string& s) {
        for (auto& x : v)
            if (x == s) return;
        v.push_back(s);
    }

    static std::string rel(const std::string& tile) { return "tile_" + tile; }

    void line(const std::string& s = "") { out += s + "\n"; }

    const std::vector<std::string>& at(const std::map<std::string, std::vector<std::string>>& m,
                                       const std::string& key) const {
        static const std::vector<std::string> empty;
        auto it = m.find(key);
        return it == m.end() ? empty : it->second;
    }

    // Allowed tiles above location (`row`, `col`), as a disjunction of atoms.
    std::string upper_ok(const std::string& tile, const std::string& row,
                         const std::string& col) const {
        std::vector<std::string> parts;
        for (auto& s : at(vpre, tile)) parts.push_back(rel(s) + "(" + row + ", " + col + ")");
        return disj(parts);
    }

    void header() {
        line(std::string("# Board-tiling transition system (") + to_cstring(spec.variant) + ").");
        std::string names;
        for (auto& t : spec.tiles) names += (names.empty() ? "" : " ") + t;
        line("# Tiles: " + names + ".  Each action moves the frontier one board");
        line("# location forward (row-major) and places one tile there, so runs of");
        line("# the system sweep out exactly the conforming tilings.");
        line();
    }

    void vocabulary() {
        line("relation le(2)    # total order shared by both coordinates");
        line("relation pred(2)  # immediate predecessor in that order");
        line("relation last(2)  # frontier: the most recently tiled (row, column)");
        for (auto& t : spec.tiles) line("relation " + rel(t) + "(2)");
        if (tri) {
            line("relation marked(2)  # marker dragged along the frontier");
            line("relation ok(0)      # false once the marker fails to survive a step");
        }
        line("variable zero     # least coordinate");
        if (!tri) line("variable max      # column index at which a row ends");
        line();
    }

    std::vector<std::string> order_facts() const {
        std::vector<std::string> fs = {
            "forall x. le(x, x)",
            "forall x, y. le(x, y) & le(y, x) -> x = y",
            "forall x, y, z. le(x, y) & le(y, z) -> le(x, z)",
            "forall x, y. le(x, y) | le(y, x)",
            "forall x. le(zero, x)",
            "forall x, y, z. pred(x, y) -> le(x, y) & !(x = y) & (le(z, x) | le(y, z))",
        };
        if (!tri) fs.push_back("!(zero = max)"); // the board is at least two columns wide
        return fs;
    }

    void axioms() {
        for (auto& f : order_facts()) line("axiom " + f);
        line();
    }

    void inits() {
        line("# The order facts again as initial-state constraints: the initiation");
        line("# condition is checked from the inits alone.");
        for (auto& f : order_facts()) line("init " + f);
        line();
        for (auto& t : spec.tiles) {
            if (!tri && t == spec.start)
                line("init forall x, y. " + rel(t) + "(x, y) <-> x = zero & y = zero");
            else
                line("init forall x, y. !" + rel(t) + "(x, y)");
        }
        line("init forall x, y. last(x, y) <-> x = zero & y = zero");
        if (tri) {
            line("init forall x, y. marked(x, y) <-> x = zero & y = zero");
            line("init ok");
        }
        line();
    }

    // Successor-of-frontier constraint: either wrap to the next row start or
    // step one column right, staying on the board.
    std::string advance() const {
        std::string row_end = tri ? "cj = ci" : "cj = max";
        std::string width = tri ? "le(nj, ni)" : "le(nj, max)";
        return "(" + row_end + " & nj = zero & pred(ci, ni)) | (!(" + row_end +
               ") & ni = ci & pred(cj, nj) & " + width + ")";
    }

    void actions() {
        if (tri) {
            // The first placement fills the corner cell under the frontier;
            // afterwards every action moves the frontier before placing.
            std::vector<std::string> cells;
            for (auto& t : spec.tiles) cells.push_back(rel(t) + "(zero, zero)");
            for (auto& t : spec.tiles) {
                line("action place_first_" + t + " {");
                line("  assume last(zero, zero);");
                line("  assume !(" + disj(cells) + ");");
                line("  " + rel(t) + "(x, y) := " + rel(t) + "(x, y) | (x = zero & y = zero)");
                line("}");
                line();
            }
        }
        for (auto& t : spec.tiles) {
            std::vector<std::string> left;
            for (auto& s : at(hpre, t)) left.push_back(rel(s) + "(ni, pj)");
            std::string upper = upper_ok(t, "pi", "nj");
            line("action place_" + t + " {");
            line("  local ci := *;");
            line("  local cj := *;");
            line("  local ni := *;");
            line("  local nj := *;");
            line("  assume last(ci, cj);");
            line("  assume " + advance() + ";");
            line("  assume nj = zero | (exists pj. pred(pj, nj) & (" + disj(left) + "));");
            if (tri)
                line("  assume ni = zero | (exists pi. pred(pi, ni) & (!le(nj, pi) | (" + upper +
                     ")));");
            else
                line("  assume ni = zero | (exists pi. pred(pi, ni) & (" + upper + "));");
            line("  last(x, y) := x = ni & y = nj;");
            std::string update =
                "  " + rel(t) + "(x, y) := " + rel(t) + "(x, y) | (x = ni & y = nj)";
            if (tri) {
                line(update + ";");
                line("  marked(x, y) := marked(x, y) | (x = ni & y = nj & marked(ci, cj));");
                line("  ok := ok & marked(ni, nj)");
            } else {
                line(update);
            }
            line("}");
            line();
        }
    }

    // (r1, c1) strictly before (r2, c2) in row-major order.
    static std::string before_strict(const std::string& r1, const std::string& c1,
                                     const std::string& r2, const std::string& c2) {
        return "(le(" + r1 + ", " + r2 + ") & !(" + r1 + " = " + r2 + ") | " + r1 + " = " + r2 +
               " & le(" + c1 + ", " + c2 + ") & !(" + c1 + " = " + c2 + "))";
    }
    static std::string before_weak(const std::string& r1, const std::string& c1,
                                   const std::string& r2, const std::string& c2) {
        return "(le(" + r1 + ", " + r2 + ") & !(" + r1 + " = " + r2 + ") | " + r1 + " = " + r2 +
               " & le(" + c1 + ", " + c2 + "))";
    }

    // One conforming-successor conjunct per tile: a placed tile strictly
    // before the frontier has the next board location tiled, the new tile
    // matching its left neighbour and (when one exists) its upper neighbour.
    void successor_clause(const std::string& t) {
        std::string row_end = tri ? "j = i" : "j = max";
        std::string width = tri ? "le(sj, si)" : "le(sj, max)";
        std::vector<std::string> inrow;
        for (auto& t2 : at(hnext, t)) {
            std::string v = upper_ok(t2, "ap", "sj");
            std::string above = tri ? "(!le(sj, ap) | (" + v + "))" : "(" + v + ")";
            inrow.push_back("(" + rel(t2) + "(si, sj) & (i = zero | pred(ap, i) & " + above +
                            "))");
        }
        std::vector<std::string> wrap;
        for (auto& t2 : spec.tiles)
            wrap.push_back("(" + rel(t2) + "(si, sj) & (" + upper_ok(t2, "i", "zero") + "))");
        line("invariant forall i, j, mi, mj. " + rel(t) + "(i, j) & last(mi, mj) & " +
             before_strict("i", "j", "mi", "mj") + " -> (exists si, sj, ap. !(" + row_end +
             ") & si = i & pred(j, sj) & " + width + " & (" + disj(inrow) + ") | " + row_end +
             " & sj = zero & pred(i, si) & (" + disj(wrap) + "))");
    }

    void invariants() {
        line("# The frontier is a single location.");
        line("invariant forall a1, b1, a2, b2. last(a1, b1) & last(a2, b2) -> a1 = a2 & b1 = b2");
        line();
        line("# Every placed tile strictly before the frontier has a conforming");
        line("# successor at the next board location.");
        for (auto& t : spec.tiles) successor_clause(t);
        line();
        if (tri) {
            line("# The marker survives along consecutive board locations up to the");
            line("# frontier.");
            line("invariant forall i1, j1, i2, j2, mi, mj. last(mi, mj) & " +
                 before_weak("i1", "j1", "mi", "mj") + " & " +
                 before_weak("i2", "j2", "mi", "mj") +
                 " & (i2 = i1 & !(j1 = i1) & pred(j1, j2) | j1 = i1 & j2 = zero & pred(i1, i2))" +
                 " & marked(i1, j1) -> marked(i2, j2)");
            line();
            line("invariant ok");
            line("safety ok");
        } else {
            std::string unsafe = "forall i, mi, mj. last(mi, mj) & " +
                                 before_weak("i", "max", "mi", "mj") + " -> !" + rel(spec.halt) +
                                 "(i, max)";
            line("# The halt tile never ends a row inside the tiled region.");
            line("invariant " + unsafe);
            line("safety " + unsafe);
        }
    }
};

} // namespace detail_tl

// ------------------------------------------------------------- JSON loading

// Keys: tiles (array of names), start, halt, horizontal, vertical (arrays of
// [a, b] pairs; H and V accepted as aliases), variant ("finiteBoard" or
// "lowerTriangular").
inline TileSpec tile_spec_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("tile spec must be a JSON object");
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!doc.contains(key))
            throw std::invalid_argument(std::string("tile spec is missing '") + key + "'");
        return doc.at(key);
    };
    auto str = [](const nlohmann::json& v, const std::string& what) {
        if (!v.is_string())
            throw std::invalid_argument(what + " must be a string");
        return v.get<std::string>();
    };

    TileSpec spec;
    const nlohmann::json& tiles = need("tiles");
    if (!tiles.is_array()) throw std::invalid_argument("'tiles' must be an array");
    for (auto& t : tiles) spec.tiles.push_back(str(t, "a tile name"));
    spec.start = str(need("start"), "'start'");
    spec.halt = str(need("halt"), "'halt'");

    auto pairs = [&](const char* key, const char* alias) {
        const nlohmann::json* arr = nullptr;
        if (doc.contains(key)) arr = &doc.at(key);
        else if (doc.contains(alias)) arr = &doc.at(alias);
        else
            throw std::invalid_argument(std::string("tile spec is missing '") + key + "'");
        if (!arr->is_array())
            throw std::invalid_argument(std::string("'") + key + "' must be an array of pairs");
        std::vector<std::pair<std::string, std::string>> out;
        for (auto& p : *arr) {
            if (!p.is_array() || p.size() != 2)
                throw std::invalid_argument(std::string("each '") + key +
                                            "' entry must be a pair [a, b]");
            out.emplace_back(str(p.at(0), "an adjacency tile"),
                             str(p.at(1), "an adjacency tile"));
        }
        return out;
    };
    spec.horizontal = pairs("horizontal", "H");
    spec.vertical = pairs("vertical", "V");

    std::string v = str(need("variant"), "'variant'");
    if (v == "finiteBoard") spec.variant = TileSpec::Variant::FiniteBoard;
    else if (v == "lowerTriangular") spec.variant = TileSpec::Variant::LowerTriangular;
    else
        throw std::invalid_argument("unknown variant '" + v + "'");

    detail_tl::check_spec(spec);
    return spec;
}

inline TileSpec load_tile_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read tile spec: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("tile spec is not valid JSON: " + std::string(e.what()));
    }
    return tile_spec_from_json(doc);
}

// ---------------------------------------------------------------- generation

inline std::string tiling_source(const TileSpec& spec) {
    detail_tl::check_spec(spec);
    return detail_tl::SourceBuilder(spec).build();
}

inline ProgramModel generate_model(const TileSpec& spec) { return parse(tiling_source(spec)); }

} // namespace bhz
