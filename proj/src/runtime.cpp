#include "sp/runtime.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <thread>

namespace sp {

std::string Fingerprint::hex() const {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                  static_cast<unsigned long long>(lo));
    return buf;
}

Fingerprint fingerprint(const Pattern& p) {
    Fingerprint f{0xcbf29ce484222325ull, 0x84222325cbf29ce4ull};
    for (std::size_t i = 0; i < p.size(); ++i) {
        // Span markers keep `a | b` and `| a b` apart.
        char tag = p.span_of(i) == Span::Id ? 'I' : p.span_of(i) == Span::Close ? 'C' : 'T';
        f.hi = fnv1a(p[i].text, fnv1a(std::string_view(&tag, 1), f.hi));
        f.lo = fnv1a(p[i].text, f.lo * 31 + static_cast<unsigned char>(tag));
        f.hi = fnv1a("\x1f", f.hi);
        f.lo = fnv1a("\x1e", f.lo);
    }
    return f;
}

Fingerprint fingerprint(const MultipleAlignment& a) {
    Fingerprint f{0x6c62272e07bb0142ull, 0x62b821756295c58dull};
    auto mix = [&](std::string_view s) {
        f.hi = fnv1a(s, f.hi);
        f.lo = fnv1a(s, f.lo * 31 + 7);
    };
    for (const auto& r : a.rows()) {
        const Fingerprint p = fingerprint(r.pattern);
        mix(p.hex() + ":" + std::to_string(r.source) + ";");
    }
    for (const auto& col : a.columns()) {
        std::string c = "[";
        for (const auto& cell : col.cells) c += std::to_string(cell.row) + "." + std::to_string(cell.pos) + ",";
        mix(c);
    }
    return f;
}

void run_tasks(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    if (workers == 0) throw Error("workers must be >= 1");
    std::vector<std::exception_ptr> failure(n);
    auto attempt = [&](std::size_t i) {
        for (int tries = 0; tries < 2; ++tries) {
            try {
                fn(i);
                failure[i] = nullptr;
                return;
            } catch (...) {
                failure[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(workers, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) attempt(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) attempt(i);
            });
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!failure[i]) continue;
        try {
            std::rethrow_exception(failure[i]);
        } catch (const std::exception& e) {
            throw TaskFailure(i, e.what());
        } catch (...) {
            throw TaskFailure(i, "unknown error");
        }
    }
}

std::size_t MatchKeyHash::operator()(const MatchKey& k) const noexcept {
    std::uint64_t h = k.driving.hi ^ (k.target.lo * 0x9e3779b97f4a7c15ull);
    h ^= k.table + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h ^= (k.beam_width * 1315423911u) ^ (k.max_alternatives << 17) ^ (static_cast<std::uint64_t>(k.source) << 40) ^
         (k.exhaustive ? 0x5bd1e995ull : 0);
    return static_cast<std::size_t>(h);
}

MatchKey make_match_key(const Pattern& driving, const Pattern& target, const SymbolTable& table,
                        const SearchBudget& budget) {
    return MatchKey{fingerprint(driving), fingerprint(target), table.fingerprint(), -1, budget.beam_width,
                    budget.max_alternatives, budget.exhaustive};
}

MatchKey make_match_key(const MultipleAlignment& base, const Pattern& target, long source, const SymbolTable& table,
                        const SearchBudget& budget) {
    Fingerprint d = fingerprint(base);
    d.hi ^= 0xa5a5a5a5a5a5a5a5ull;  // keeps alignment keys apart from pattern keys
    return MatchKey{d,      fingerprint(target), table.fingerprint(), source, budget.beam_width, budget.max_alternatives,
                    budget.exhaustive};
}

std::optional<std::vector<HitSequence>> MatchIndex::lookup(const MatchKey& key) {
    std::lock_guard lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    lru_.splice(lru_.begin(), lru_, it->second);
    return it->second->second;
}

void MatchIndex::record(const MatchKey& key, std::vector<HitSequence> result) {
    std::lock_guard lock(mutex_);
    if (capacity_ == 0) return;
    if (auto it = map_.find(key); it != map_.end()) {
        it->second->second = std::move(result);
        lru_.splice(lru_.begin(), lru_, it->second);
        return;
    }
    lru_.emplace_front(key, std::move(result));
    map_.emplace(key, lru_.begin());
    while (map_.size() > capacity_) {
        map_.erase(lru_.back().first);
        lru_.pop_back();
    }
}

std::size_t MatchIndex::size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
}

void TaskBatch::canonicalize() {
    std::stable_sort(tasks.begin(), tasks.end(), [](const MatchTask& a, const MatchTask& b) {
        return std::tie(a.driving_ref, a.target_ref) < std::tie(b.driving_ref, b.target_ref);
    });
}

std::vector<std::vector<HitSequence>> map_reduce_matches(TaskBatch batch, const SymbolTable& table,
                                                         std::size_t workers, MatchIndex* index) {
    batch.canonicalize();
    const std::size_t n = batch.tasks.size();
    std::vector<std::vector<HitSequence>> results(n);
    // Index lookups happen serially so counters do not depend on scheduling;
    // a repeated pairing inside the batch is served by its first occurrence.
    std::vector<MatchKey> keys;
    std::vector<long> same_as(n, -1);
    std::vector<std::size_t> todo;
    if (index) {
        keys.reserve(n);
        std::unordered_map<MatchKey, std::size_t, MatchKeyHash> first;
        for (std::size_t i = 0; i < n; ++i) {
            const MatchTask& t = batch.tasks[i];
            keys.push_back(t.base ? make_match_key(*t.base, *t.target, t.source, table, t.budget)
                                  : make_match_key(*t.driving, *t.target, table, t.budget));
            if (auto f = first.find(keys[i]); f != first.end()) {
                same_as[i] = static_cast<long>(f->second);
                index->count_hit();
            } else if (auto cached = index->lookup(keys[i])) {
                results[i] = std::move(*cached);
                first.emplace(keys[i], i);
            } else {
                first.emplace(keys[i], i);
                todo.push_back(i);
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) todo.push_back(i);
    }
    // Map: each pairing is searched independently.
    try {
        run_tasks(todo.size(), workers, [&](std::size_t k) {
            const MatchTask& t = batch.tasks[todo[k]];
            results[todo[k]] = t.base ? find_alignment_matches(*t.base, *t.target, t.source, table, t.budget)
                                      : find_matches(*t.driving, *t.target, table, t.budget);
        });
    } catch (const TaskFailure& f) {
        throw TaskFailure(todo[f.task()], f.detail());
    }
    if (index)
        for (std::size_t i : todo) index->record(keys[i], results[i]);
    // Reduce: canonical order and per-task truncation.
    for (std::size_t i = 0; i < n; ++i) {
        if (same_as[i] >= 0) results[i] = results[static_cast<std::size_t>(same_as[i])];
        std::sort(results[i].begin(), results[i].end(),
                  [](const HitSequence& a, const HitSequence& b) { return better(a, b); });
        if (results[i].size() > batch.tasks[i].budget.max_alternatives)
            results[i].resize(batch.tasks[i].budget.max_alternatives);
    }
    return results;
}

}  // namespace sp
