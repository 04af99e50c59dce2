#include "sp/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

namespace sp {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Symbol::Symbol(std::string t, Role r) : text(std::move(t)), role(r) {
    if (text.empty()) throw Error("empty symbol");
    for (unsigned char c : text)
        if (std::isspace(c)) throw Error("symbol contains whitespace: '" + text + "'");
    if (text.front() == '#')
        role = Role::Boundary;
    else if (role == Role::Boundary)
        role = Role::Contents;
}

Pattern Pattern::make_new(const std::vector<std::string>& symbols, std::uint64_t frequency) {
    if (symbols.empty()) throw Error("empty pattern");
    Pattern p;
    for (const auto& s : symbols) p.symbols_.emplace_back(s);
    p.set_frequency(frequency);
    p.origin_ = Origin::New;
    return p;
}

Pattern Pattern::make_old(const std::vector<std::string>& id, const std::vector<std::string>& contents,
                          const std::vector<std::string>& close, std::uint64_t frequency) {
    if (id.empty() && contents.empty() && close.empty()) throw Error("empty pattern");
    Pattern p;
    for (const auto& s : id) p.symbols_.emplace_back(s, Role::Identifier);
    for (const auto& s : contents) p.symbols_.emplace_back(s, Role::Contents);
    for (const auto& s : close) p.symbols_.emplace_back(s, Role::Contents);
    p.id_size_ = id.size();
    p.close_size_ = close.size();
    p.set_frequency(frequency);
    p.origin_ = Origin::Old;
    return p;
}

Pattern Pattern::make_plain(const std::vector<std::string>& symbols, std::uint64_t frequency) {
    return make_old({}, symbols, {}, frequency);
}

void Pattern::set_frequency(std::uint64_t f) {
    if (f == 0) throw Error("pattern frequency must be positive");
    frequency_ = f;
}

Span Pattern::span_of(std::size_t i) const noexcept {
    if (i < id_size_) return Span::Id;
    if (i >= contents_end()) return Span::Close;
    return Span::Contents;
}

std::vector<std::string> Pattern::texts() const {
    std::vector<std::string> out;
    out.reserve(symbols_.size());
    for (const auto& s : symbols_) out.push_back(s.text);
    return out;
}

std::vector<std::string> Pattern::texts(Span span) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (span_of(i) == span) out.push_back(symbols_[i].text);
    return out;
}

std::string Pattern::key() const {
    std::string out;
    for (const auto& s : symbols_) {
        if (!out.empty()) out += ' ';
        out += s.text;
    }
    return out;
}

bool operator==(const Pattern& a, const Pattern& b) {
    return a.origin_ == b.origin_ && a.id_size_ == b.id_size_ && a.close_size_ == b.close_size_ &&
           a.frequency_ == b.frequency_ && a.symbols_ == b.symbols_;
}

SymbolTable::SymbolTable(std::map<std::string, std::uint64_t> counts) {
    for (const auto& [text, f] : counts) total_ += f;
    // A single symbol type would otherwise cost zero bits.
    std::uint64_t denom = total_ + (counts.size() == 1 ? 1 : 0);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& [text, f] : counts) {
        double c = -std::log2(static_cast<double>(f) / static_cast<double>(denom));
        entries_.emplace(text, Entry{f, c});
        h = fnv1a(text, h);
        h = fnv1a(std::to_string(f) + ";", h);
    }
    unseen_cost_ = std::log2(static_cast<double>(denom) + 2.0);
    fingerprint_ = h;
}

std::uint64_t SymbolTable::frequency(std::string_view text) const {
    auto it = entries_.find(text);
    return it == entries_.end() ? 1 : it->second.total_frequency;
}

double SymbolTable::cost(std::string_view text) const {
    auto it = entries_.find(text);
    return it == entries_.end() ? unseen_cost_ : it->second.cost_bits;
}

bool SymbolTable::contains(std::string_view text) const { return entries_.find(text) != entries_.end(); }

Grammar::Grammar(std::vector<Pattern> patterns, std::vector<std::size_t> source_lines)
    : patterns_(std::move(patterns)), lines_(std::move(source_lines)) {
    lines_.resize(patterns_.size(), 0);
}

std::size_t Grammar::source_line(std::size_t i) const { return i < lines_.size() ? lines_[i] : 0; }

std::size_t Grammar::add(const Pattern& p) {
    if (p.is_new()) throw Error("grammar patterns must be Old");
    table_valid_ = false;
    const std::string k = p.key();
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
        if (patterns_[i].key() == k) {
            patterns_[i].set_frequency(patterns_[i].frequency() + p.frequency());
            return i;
        }
    }
    patterns_.push_back(p);
    lines_.push_back(0);
    return patterns_.size() - 1;
}

const SymbolTable& Grammar::table() const {
    if (!table_valid_) {
        table_ = build_symbol_table(*this);
        table_valid_ = true;
    }
    return table_;
}

SymbolTable build_symbol_table(const std::vector<const std::vector<Pattern>*>& pattern_sets) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto* set : pattern_sets)
        for (const auto& p : *set)
            for (const auto& s : p.symbols()) {
                if (s.is_separator()) continue;
                auto [it, inserted] = counts.try_emplace(s.text, 1);
                it->second += p.frequency();
            }
    return SymbolTable(std::move(counts));
}

SymbolTable build_symbol_table(const Grammar& grammar) { return build_symbol_table({&grammar.patterns()}); }

double pattern_raw_cost(const Pattern& pattern, const SymbolTable& table) {
    double bits = 0;
    for (const auto& s : pattern.symbols())
        if (!s.is_separator()) bits += table.cost(s.text);
    return bits;
}

std::vector<ValidationIssue> validate_grammar(const Grammar& grammar) {
    std::vector<ValidationIssue> issues;
    auto line_of = [&](std::size_t i) {
        std::size_t l = grammar.source_line(i);
        return l ? l : i + 1;
    };
    std::map<std::string, std::vector<std::size_t>> seen;
    for (std::size_t i = 0; i < grammar.size(); ++i) {
        const Pattern& p = grammar[i];
        const std::size_t line = line_of(i);
        if (p.empty()) {
            issues.push_back({ValidationIssue::Kind::Empty, {line}, "empty pattern at line " + std::to_string(line)});
            continue;
        }
        if (p.is_new())
            issues.push_back({ValidationIssue::Kind::NotOld, {line}, "New pattern in grammar at line " + std::to_string(line)});
        bool boundary_in_id = false, contents_in_close = false;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (p.span_of(k) == Span::Id && p[k].is_boundary()) boundary_in_id = true;
            if (p.span_of(k) == Span::Close && !p[k].is_boundary()) contents_in_close = true;
        }
        if (boundary_in_id || contents_in_close)
            issues.push_back({ValidationIssue::Kind::SpanOrder, {line},
                              "span order violation at line " + std::to_string(line) +
                                  (boundary_in_id ? ": boundary symbol in id span" : ": non-boundary symbol in close span")});
        seen[p.key()].push_back(line);
    }
    for (const auto& [key, lines] : seen) {
        if (lines.size() < 2) continue;
        std::string msg = "duplicate pattern '" + key + "' at lines";
        for (auto l : lines) msg += " " + std::to_string(l);
        issues.push_back({ValidationIssue::Kind::Duplicate, lines, msg});
    }
    std::stable_sort(issues.begin(), issues.end(),
                     [](const ValidationIssue& a, const ValidationIssue& b) { return a.lines.front() < b.lines.front(); });
    return issues;
}

}  // namespace sp
