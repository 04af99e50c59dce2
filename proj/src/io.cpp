#include "sp/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace sp {

namespace {

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return out;
}

bool is_comment_or_blank(std::string_view line) {
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '#';
    }
    return true;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += ' ';
        out += s;
    }
    return out;
}

struct Token {
    std::size_t x;
    std::string text;
};

std::vector<Token> tokens_with_x(std::string_view line) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) out.push_back(Token{i, std::string(line.substr(i, j - i))});
        i = j;
    }
    return out;
}

bool all_dashes(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c == '-'; });
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

void put(std::string& line, std::size_t x, std::string_view s) {
    if (line.size() < x + s.size()) line.resize(x + s.size(), ' ');
    line.replace(x, s.size(), s);
}

std::string rstrip(std::string s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    std::size_t add() {
        parent.push_back(parent.size());
        return parent.size() - 1;
    }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

Grammar parse_grammar(std::string_view text) {
    std::vector<Pattern> patterns;
    std::vector<std::size_t> lines;
    auto all = lines_of(text);
    for (std::size_t n = 0; n < all.size(); ++n) {
        const std::size_t line_no = n + 1;
        if (is_comment_or_blank(all[n])) continue;
        auto tokens = split_ws(all[n]);
        const std::string& f = tokens.front();
        if (!all_digits(f)) throw ParseError(line_no, "invalid frequency");
        std::uint64_t freq = 0;
        try {
            freq = std::stoull(f);
        } catch (const std::exception&) {
            throw ParseError(line_no, "invalid frequency");
        }
        if (freq == 0) throw ParseError(line_no, "invalid frequency");
        std::vector<std::vector<std::string>> parts(1);
        for (std::size_t k = 1; k < tokens.size(); ++k) {
            if (tokens[k] == "|")
                parts.emplace_back();
            else
                parts.back().push_back(tokens[k]);
        }
        if (parts.size() > 3) throw ParseError(line_no, "too many '|' delimiters");
        std::vector<std::string> id, contents, close;
        if (parts.size() == 1) {
            contents = parts[0];
        } else {
            id = parts[0];
            contents = parts[1];
            if (parts.size() == 3) close = parts[2];
        }
        if (id.empty() && contents.empty() && close.empty()) throw ParseError(line_no, "empty pattern");
        try {
            patterns.push_back(Pattern::make_old(id, contents, close, freq));
        } catch (const Error& e) {
            throw ParseError(line_no, e.what());
        }
        lines.push_back(line_no);
    }
    return Grammar(std::move(patterns), std::move(lines));
}

std::string serialize_grammar(const Grammar& grammar) {
    std::string out;
    for (const auto& p : grammar.patterns()) {
        out += std::to_string(p.frequency());
        if (p.id_size() == 0 && p.close_size() == 0) {
            out += ' ' + join(p.texts());
        } else {
            for (Span span : {Span::Id, Span::Contents, Span::Close}) {
                if (span != Span::Id) out += " |";
                auto t = p.texts(span);
                if (!t.empty()) out += ' ' + join(t);
            }
        }
        out += '\n';
    }
    return out;
}

std::vector<Pattern> parse_patterns(std::string_view text) {
    std::vector<Pattern> out;
    auto all = lines_of(text);
    for (std::size_t n = 0; n < all.size(); ++n) {
        if (is_comment_or_blank(all[n])) continue;
        try {
            out.push_back(Pattern::make_new(split_ws(all[n])));
        } catch (const Error& e) {
            throw ParseError(n + 1, e.what());
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

std::string render_alignment(const MultipleAlignment& alignment, Orientation orientation) {
    const auto& rows = alignment.rows();
    const auto& cols = alignment.columns();
    std::vector<std::size_t> lo(cols.size()), hi(cols.size()), width(cols.size(), 0);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        lo[c] = cols[c].cells.front().row;
        hi[c] = cols[c].cells.back().row;
        for (const auto& cell : cols[c].cells) width[c] = std::max(width[c], alignment.symbol(cell).text.size());
    }
    std::string out;

    if (orientation == Orientation::Rows) {
        const std::size_t label = std::to_string(rows.size() - 1).size();
        std::vector<std::size_t> x(cols.size());
        std::size_t cursor = label + 1;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            x[c] = cursor;
            cursor += width[c] + 1;
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::string line;
            put(line, 0, std::to_string(r));
            for (std::size_t c = 0; c < cols.size(); ++c) {
                if (cols[c].has_row(r)) {
                    for (const auto& cell : cols[c].cells)
                        if (cell.row == r) put(line, x[c], alignment.symbol(cell).text);
                } else if (lo[c] < r && r < hi[c]) {
                    put(line, x[c], "|");
                }
            }
            put(line, cursor, std::to_string(r));
            out += rstrip(line) + '\n';
            if (r + 1 == rows.size()) break;
            std::string conn;
            for (std::size_t c = 0; c < cols.size(); ++c)
                if (cols[c].matched() && lo[c] <= r && hi[c] >= r + 1) put(conn, x[c], "|");
            out += rstrip(conn) + '\n';
        }
        return out;
    }

    std::vector<std::size_t> rwidth(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rwidth[r] = std::to_string(r).size();
        for (const auto& s : rows[r].pattern.symbols()) rwidth[r] = std::max(rwidth[r], s.text.size());
    }
    std::vector<std::size_t> x(rows.size());
    std::size_t cursor = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        x[r] = cursor;
        cursor += rwidth[r] + 4;
    }
    std::string header;
    for (std::size_t r = 0; r < rows.size(); ++r) put(header, x[r], std::to_string(r));
    out += rstrip(header) + "\n\n";
    for (const auto& col : cols) {
        std::string line;
        for (std::size_t k = 0; k < col.cells.size(); ++k) {
            const Cell& cell = col.cells[k];
            const std::string& s = alignment.symbol(cell).text;
            put(line, x[cell.row], s);
            if (k + 1 < col.cells.size()) {
                std::size_t from = x[cell.row] + s.size() + 1, to = x[col.cells[k + 1].row] - 1;
                put(line, from, std::string(to - from, '-'));
            }
        }
        out += rstrip(line) + '\n';
    }
    out += '\n' + rstrip(header) + '\n';
    return out;
}

RenderedAlignment parse_rendering(std::string_view text, Orientation orientation) {
    RenderedAlignment out;
    UnionFind uf;
    std::vector<std::pair<std::size_t, std::size_t>> cell_of;  // uf id -> (row, pos)
    auto add_cell = [&](std::size_t row, std::size_t pos) {
        cell_of.emplace_back(row, pos);
        return uf.add();
    };
    auto lines = lines_of(text);

    if (orientation == Orientation::Rows) {
        // Row lines start with their label in the first column.
        // The `|` below a symbol may sit anywhere under its text.
        struct Placed {
            std::size_t x, len, id;
        };
        const std::size_t npos = static_cast<std::size_t>(-1);
        std::vector<std::vector<Placed>> placed;
        std::vector<std::size_t> line_row(lines.size(), npos);
        std::vector<std::vector<Token>> bars(lines.size());
        for (std::size_t n = 0; n < lines.size(); ++n) {
            auto toks = tokens_with_x(lines[n]);
            if (!lines[n].empty() && lines[n][0] != ' ' && toks.size() >= 2 && all_digits(toks.front().text)) {
                const std::size_t row = std::stoul(toks.front().text);
                if (row >= out.rows.size()) out.rows.resize(row + 1);
                if (row >= placed.size()) placed.resize(row + 1);
                line_row[n] = row;
                for (std::size_t k = 1; k + 1 < toks.size(); ++k) {
                    if (toks[k].text == "|") continue;
                    placed[row].push_back(Placed{toks[k].x, toks[k].text.size(), add_cell(row, out.rows[row].size())});
                    out.rows[row].push_back(toks[k].text);
                }
            }
        }
        auto char_at = [&](std::size_t n, std::size_t x) { return x < lines[n].size() ? lines[n][x] : ' '; };
        for (std::size_t n = 0; n + 1 < lines.size(); ++n) {
            if (line_row[n] == npos || line_row[n + 1] != npos) continue;
            for (const auto& p : placed[line_row[n]]) {
                std::size_t px = npos;
                for (std::size_t x = p.x; x < p.x + p.len; ++x)
                    if (char_at(n + 1, x) == '|') {
                        px = x;
                        break;
                    }
                if (px == npos) continue;
                for (std::size_t m = n + 2; m < lines.size(); ++m) {
                    if (line_row[m] == npos) {
                        if (char_at(m, px) != '|') break;
                        continue;
                    }
                    auto& targets = placed[line_row[m]];
                    auto it = std::find_if(targets.begin(), targets.end(),
                                           [&](const Placed& q) { return q.x <= px && px < q.x + q.len; });
                    if (it != targets.end()) {
                        uf.unite(p.id, it->id);
                        break;
                    }
                    if (char_at(m, px) != '|') break;
                }
            }
        }
    } else {
        std::vector<std::size_t> header_x;
        std::size_t n = 0;
        for (; n < lines.size(); ++n) {
            auto toks = tokens_with_x(lines[n]);
            if (toks.empty()) continue;
            for (const auto& t : toks) header_x.push_back(t.x);
            ++n;
            break;
        }
        out.rows.resize(header_x.size());
        for (; n < lines.size(); ++n) {
            auto toks = tokens_with_x(lines[n]);
            if (toks.empty()) continue;
            if (std::all_of(toks.begin(), toks.end(), [](const Token& t) { return all_digits(t.text); }) &&
                toks.size() == header_x.size())
                break;  // footer
            long prev = -1;
            bool linked = false;
            for (const auto& t : toks) {
                if (all_dashes(t.text)) {
                    linked = true;
                    continue;
                }
                auto it = std::find(header_x.begin(), header_x.end(), t.x);
                if (it == header_x.end()) throw Error("rendering token '" + t.text + "' is not under a row header");
                const std::size_t row = static_cast<std::size_t>(it - header_x.begin());
                const std::size_t id = add_cell(row, out.rows[row].size());
                out.rows[row].push_back(t.text);
                if (linked && prev >= 0) uf.unite(static_cast<std::size_t>(prev), id);
                prev = static_cast<long>(id);
                linked = false;
            }
        }
    }

    std::map<std::size_t, std::set<std::pair<std::size_t, std::size_t>>> groups;
    for (std::size_t id = 0; id < cell_of.size(); ++id) groups[uf.find(id)].insert(cell_of[id]);
    for (auto& [root, g] : groups)
        if (g.size() >= 2) out.columns.insert(std::move(g));
    return out;
}

RenderedAlignment rendered_view(const MultipleAlignment& alignment) {
    RenderedAlignment out;
    for (const auto& r : alignment.rows()) out.rows.push_back(r.pattern.texts());
    for (const auto* col : alignment.matched_columns()) {
        std::set<std::pair<std::size_t, std::size_t>> g;
        for (const auto& c : col->cells) g.emplace(c.row, c.pos);
        out.columns.insert(std::move(g));
    }
    return out;
}

bool same_alignment(const RenderedAlignment& a, const RenderedAlignment& b) {
    if (a.rows.size() != b.rows.size() || a.columns.size() != b.columns.size()) return false;
    if (a.rows.empty()) return true;
    if (a.rows[0] != b.rows[0]) return false;
    const std::size_t n = a.rows.size();
    std::vector<std::size_t> map(n, 0);
    std::vector<bool> used(n, false);
    used[0] = true;
    std::function<bool(std::size_t)> assign = [&](std::size_t r) -> bool {
        if (r == n) {
            std::set<std::set<std::pair<std::size_t, std::size_t>>> mapped;
            for (const auto& g : a.columns) {
                std::set<std::pair<std::size_t, std::size_t>> m;
                for (const auto& [row, pos] : g) m.emplace(map[row], pos);
                mapped.insert(std::move(m));
            }
            return mapped == b.columns;
        }
        for (std::size_t s = 1; s < n; ++s) {
            if (used[s] || a.rows[r] != b.rows[s]) continue;
            used[s] = true;
            map[r] = s;
            if (assign(r + 1)) return true;
            used[s] = false;
        }
        return false;
    };
    return assign(1);
}

MultipleAlignment alignment_from_rendering(const RenderedAlignment& rendered, const std::vector<Pattern>& new_patterns,
                                           const Grammar& grammar) {
    MultipleAlignment bare = MultipleAlignment::bare(new_patterns);
    if (rendered.rows.empty() || rendered.rows[0] != bare.new_row().texts())
        throw Error("rendering row 0 is not the New pattern");
    std::vector<Row> rows{bare.rows().front()};
    for (std::size_t r = 1; r < rendered.rows.size(); ++r) {
        long source = -1;
        for (std::size_t j = 0; j < grammar.size() && source < 0; ++j)
            if (grammar[j].texts() == rendered.rows[r]) source = static_cast<long>(j);
        if (source < 0) throw Error("rendering row " + std::to_string(r) + " is not a grammar pattern");
        rows.push_back(Row{grammar[static_cast<std::size_t>(source)], source});
    }

    std::vector<Column> cols;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> owner;
    for (const auto& g : rendered.columns) {
        Column c;
        for (const auto& [row, pos] : g) {
            if (row >= rows.size() || pos >= rows[row].pattern.size()) throw Error("rendering cell out of range");
            if (!owner.emplace(std::make_pair(row, pos), cols.size()).second) throw Error("rendering cell used twice");
            c.cells.push_back(Cell{row, pos});
        }
        cols.push_back(std::move(c));
    }
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t p = 0; p < rows[r].pattern.size(); ++p)
            if (owner.emplace(std::make_pair(r, p), cols.size()).second) cols.push_back(Column{{Cell{r, p}}});

    // Kahn's algorithm over "precedes within a row" edges, smallest cell first.
    std::vector<std::vector<std::size_t>> next(cols.size());
    std::vector<std::size_t> indegree(cols.size(), 0);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t p = 0; p + 1 < rows[r].pattern.size(); ++p) {
            const std::size_t a = owner.at({r, p}), b = owner.at({r, p + 1});
            next[a].push_back(b);
            ++indegree[b];
        }
    std::set<std::pair<Cell, std::size_t>> ready;
    for (std::size_t c = 0; c < cols.size(); ++c)
        if (indegree[c] == 0) ready.emplace(cols[c].cells.front(), c);
    std::vector<Column> ordered;
    while (!ready.empty()) {
        const std::size_t c = ready.begin()->second;
        ready.erase(ready.begin());
        ordered.push_back(cols[c]);
        for (std::size_t d : next[c])
            if (--indegree[d] == 0) ready.emplace(cols[d].cells.front(), d);
    }
    if (ordered.size() != cols.size()) throw Error("rendering has crossing columns");
    return MultipleAlignment::from_parts(std::move(rows), std::move(ordered));
}

void write_audit(const std::vector<StageAudit>& stages, const AuditManifest& manifest,
                 const std::filesystem::path& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw Error("cannot create audit directory " + directory.string());
    for (const auto& st : stages) {
        std::string body = "run_id\tstage\tserialization\tscore_bits\tsurvived\tindex_hits\tindex_misses\tworkers\n";
        for (const auto& c : st.candidates) {
            char score[64];
            std::snprintf(score, sizeof score, "%.9f", c.score);
            body += manifest.run_id + '\t' + std::to_string(st.stage) + '\t' + c.serialization + '\t' + score + '\t' +
                    (c.survived ? "1" : "0") + '\t' + std::to_string(st.index_hits) + '\t' +
                    std::to_string(st.index_misses) + '\t' + std::to_string(st.workers) + '\n';
        }
        char name[32];
        std::snprintf(name, sizeof name, "stage_%03zu.tsv", st.stage);
        write_file(directory / name, body);
    }
    std::string m = "run_id=" + manifest.run_id + "\nversion=" SP_VERSION "\nstages=" + std::to_string(stages.size()) + "\n";
    for (const auto& [k, v] : manifest.params) m += "param." + k + "=" + v + "\n";
    for (const auto& [k, v] : manifest.inputs) m += "input." + k + "=" + v + "\n";
    m += "timestamp=" + manifest.timestamp + "\n";
    write_file(directory / "manifest.txt", m);
}

}  // namespace sp
