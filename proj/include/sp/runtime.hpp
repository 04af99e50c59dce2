#pragma once

// Deterministic map/reduce over match tasks, and a content-addressed index of
// matches already found.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <list>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sp/alignment.hpp"
#include "sp/core.hpp"
#include "sp/matcher.hpp"

namespace sp {

struct Fingerprint {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
    friend auto operator<=>(const Fingerprint&, const Fingerprint&) = default;
    std::string hex() const;
};

Fingerprint fingerprint(const Pattern& p);
// Covers rows, sources and the full column order.
Fingerprint fingerprint(const MultipleAlignment& a);

class TaskFailure : public Error {
public:
    TaskFailure(std::size_t task, const std::string& what)
        : Error("task " + std::to_string(task) + " failed: " + what), task_(task), detail_(what) {}
    std::size_t task() const noexcept { return task_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t task_;
    std::string detail_;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. A throwing task is
// retried once; a second failure fails the whole run with that task id.
void run_tasks(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct MatchKey {
    Fingerprint driving;
    Fingerprint target;
    std::uint64_t table = 0;
    long source = -1;
    std::size_t beam_width = 0;
    std::size_t max_alternatives = 0;
    bool exhaustive = false;
    friend bool operator==(const MatchKey&, const MatchKey&) = default;
};

struct MatchKeyHash {
    std::size_t operator()(const MatchKey& k) const noexcept;
};

MatchKey make_match_key(const Pattern& driving, const Pattern& target, const SymbolTable& table,
                        const SearchBudget& budget);
MatchKey make_match_key(const MultipleAlignment& base, const Pattern& target, long source, const SymbolTable& table,
                        const SearchBudget& budget);

// LRU-bounded map from match key to find_matches output. Thread-safe.
class MatchIndex {
public:
    explicit MatchIndex(std::size_t capacity = 1'000'000) : capacity_(capacity) {}

    std::optional<std::vector<HitSequence>> lookup(const MatchKey& key);
    void record(const MatchKey& key, std::vector<HitSequence> result);

    void count_hit() noexcept { ++hits_; }

    std::uint64_t hits() const noexcept { return hits_; }
    std::uint64_t misses() const noexcept { return misses_; }
    std::size_t size() const;
    std::size_t capacity() const noexcept { return capacity_; }

private:
    using Entry = std::pair<MatchKey, std::vector<HitSequence>>;
    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> lru_;
    std::unordered_map<MatchKey, std::list<Entry>::iterator, MatchKeyHash> map_;
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> misses_{0};
};

// Pattern-pair tasks run find_matches(driving, target); alignment tasks
// (base set, driving null) run find_alignment_matches(base, target, source).
struct MatchTask {
    const Pattern* driving;
    const Pattern* target;
    // Caller-side references used for canonical ordering.
    std::size_t driving_ref;
    std::size_t target_ref;
    SearchBudget budget;
    const MultipleAlignment* base = nullptr;
    long source = -1;
};

struct TaskBatch {
    std::size_t id = 0;
    std::vector<MatchTask> tasks;
    // Sorts tasks by (driving_ref, target_ref).
    void canonicalize();
};

// One result list per task, in canonical task order, identical for every
// worker count and with or without an index.
std::vector<std::vector<HitSequence>> map_reduce_matches(TaskBatch batch, const SymbolTable& table,
                                                         std::size_t workers, MatchIndex* index = nullptr);

}  // namespace sp
