#pragma once

// Symbols, patterns, grammars and the frequency-derived bit costs shared by
// every other part of the library.

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Role { Contents, Identifier, Boundary };
enum class Origin { New, Old };

// Never matches anything; joins several New patterns into one row 0.
inline constexpr std::string_view kNewSeparator = "|#|";

struct Symbol {
    std::string text;
    Role role = Role::Contents;

    Symbol() = default;
    // Role is forced to Boundary for `#`-prefixed text.
    explicit Symbol(std::string t, Role r = Role::Contents);

    bool is_boundary() const noexcept { return role == Role::Boundary; }
    bool is_separator() const noexcept { return text == kNewSeparator; }
    friend bool operator==(const Symbol& a, const Symbol& b) { return a.text == b.text; }
};

enum class Span { Id, Contents, Close };

class Pattern {
public:
    Pattern() = default;

    static Pattern make_new(const std::vector<std::string>& symbols, std::uint64_t frequency = 1);
    static Pattern make_old(const std::vector<std::string>& id,
                            const std::vector<std::string>& contents,
                            const std::vector<std::string>& close,
                            std::uint64_t frequency = 1);
    // All-contents Old pattern (no id or close span).
    static Pattern make_plain(const std::vector<std::string>& symbols, std::uint64_t frequency = 1);

    std::size_t size() const noexcept { return symbols_.size(); }
    bool empty() const noexcept { return symbols_.empty(); }
    const Symbol& operator[](std::size_t i) const { return symbols_[i]; }
    const std::vector<Symbol>& symbols() const noexcept { return symbols_; }

    std::uint64_t frequency() const noexcept { return frequency_; }
    void set_frequency(std::uint64_t f);
    Origin origin() const noexcept { return origin_; }
    bool is_new() const noexcept { return origin_ == Origin::New; }

    std::size_t id_size() const noexcept { return id_size_; }
    std::size_t close_size() const noexcept { return close_size_; }
    std::size_t contents_begin() const noexcept { return id_size_; }
    std::size_t contents_end() const noexcept { return symbols_.size() - close_size_; }
    Span span_of(std::size_t i) const noexcept;

    std::vector<std::string> texts() const;
    std::vector<std::string> texts(Span span) const;
    // Space-joined symbol texts; the identity used for duplicate detection.
    std::string key() const;

    friend bool operator==(const Pattern& a, const Pattern& b);

private:
    std::vector<Symbol> symbols_;
    std::uint64_t frequency_ = 1;
    Origin origin_ = Origin::New;
    std::size_t id_size_ = 0;
    std::size_t close_size_ = 0;
};

class SymbolTable {
public:
    struct Entry {
        std::uint64_t total_frequency;
        double cost_bits;
    };

    SymbolTable() = default;

    // counts include the per-symbol smoothing constant already.
    explicit SymbolTable(std::map<std::string, std::uint64_t> counts);

    std::uint64_t frequency(std::string_view text) const;
    double cost(std::string_view text) const;
    double unseen_cost() const noexcept { return unseen_cost_; }
    std::uint64_t total() const noexcept { return total_; }
    bool contains(std::string_view text) const;
    const std::map<std::string, Entry, std::less<>>& entries() const noexcept { return entries_; }
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

private:
    std::map<std::string, Entry, std::less<>> entries_;
    std::uint64_t total_ = 0;
    double unseen_cost_ = 1.0;
    std::uint64_t fingerprint_ = 0;
};

class Grammar {
public:
    Grammar() = default;
    explicit Grammar(std::vector<Pattern> patterns, std::vector<std::size_t> source_lines = {});

    const std::vector<Pattern>& patterns() const noexcept { return patterns_; }
    std::size_t size() const noexcept { return patterns_.size(); }
    bool empty() const noexcept { return patterns_.empty(); }
    const Pattern& operator[](std::size_t i) const { return patterns_[i]; }
    // 1-based line number in the source file, 0 when unknown.
    std::size_t source_line(std::size_t i) const;

    // Adds an Old pattern. An identical sequence already present has its
    // frequency incremented instead. Returns the index of the stored pattern.
    std::size_t add(const Pattern& p);
    void set_frequency(std::size_t i, std::uint64_t f) {
        patterns_[i].set_frequency(f);
        table_valid_ = false;
    }
    const SymbolTable& table() const;

private:
    std::vector<Pattern> patterns_;
    std::vector<std::size_t> lines_;
    mutable SymbolTable table_;
    mutable bool table_valid_ = false;
};

// Counts over the Old patterns plus add-one smoothing.
SymbolTable build_symbol_table(const Grammar& grammar);
// Same, with extra patterns (e.g. a corpus) counted as if they were Old.
SymbolTable build_symbol_table(const std::vector<const std::vector<Pattern>*>& pattern_sets);

double pattern_raw_cost(const Pattern& pattern, const SymbolTable& table);

struct ValidationIssue {
    enum class Kind { Duplicate, Empty, SpanOrder, NotOld };
    Kind kind;
    std::vector<std::size_t> lines;
    std::string message;
};

std::vector<ValidationIssue> validate_grammar(const Grammar& grammar);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace sp
