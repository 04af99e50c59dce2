#pragma once

// Text formats: grammar files, New/corpus files, alignment renderings and
// audit directories.

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sp/alignment.hpp"
#include "sp/core.hpp"
#include "sp/engine.hpp"

namespace sp {

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(what + " at line " + std::to_string(line)), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// `<freq> <id...> | <contents...> | <close...>`; without `|` every symbol is
// contents, with a single `|` the close span is empty. `#` lines are comments.
Grammar parse_grammar(std::string_view text);
std::string serialize_grammar(const Grammar& grammar);

// One New pattern per non-comment line.
std::vector<Pattern> parse_patterns(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view text);

enum class Orientation { Rows, Columns };

std::string render_alignment(const MultipleAlignment& alignment, Orientation orientation);

// What a rendering shows: the symbols of every row and the groups of
// (row, position) cells connected into matched columns.
struct RenderedAlignment {
    std::vector<std::vector<std::string>> rows;
    std::set<std::set<std::pair<std::size_t, std::size_t>>> columns;
};

RenderedAlignment parse_rendering(std::string_view text, Orientation orientation);
RenderedAlignment rendered_view(const MultipleAlignment& alignment);

// Same rows (as a multiset of symbol sequences) and the same matched columns
// once rows are paired up by content; row numbering is ignored.
bool same_alignment(const RenderedAlignment& a, const RenderedAlignment& b);

// Rebuilds an alignment from a rendering whose rows are the New patterns and
// grammar patterns. Columns are put in a deterministic topological order.
// Throws Error when a row is not in the grammar or the rendering is illegal.
MultipleAlignment alignment_from_rendering(const RenderedAlignment& rendered, const std::vector<Pattern>& new_patterns,
                                           const Grammar& grammar);

struct AuditManifest {
    std::string run_id;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<std::pair<std::string, std::string>> inputs;  // name, fingerprint
    std::string timestamp;
};

// One tab-separated file per stage plus manifest.txt.
void write_audit(const std::vector<StageAudit>& stages, const AuditManifest& manifest,
                 const std::filesystem::path& directory);

}  // namespace sp
