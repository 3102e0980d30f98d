#pragma once

#include <map>
#include <mutex>
#include <string>

namespace boed {

// Global counter of linear-system solves, keyed by operator tag.
// Counts only increase; reset() is the single explicit exception.
class SolveLedger {
public:
    void increment(const std::string& tag, long n = 1) {
        std::lock_guard<std::mutex> lock(mutex_);
        counts_[tag] += n;
    }

    long count(const std::string& tag) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = counts_.find(tag);
        return it == counts_.end() ? 0 : it->second;
    }

    long total() const {
        std::lock_guard<std::mutex> lock(mutex_);
        long t = 0;
        for (const auto& [tag, n] : counts_) t += n;
        return t;
    }

    std::map<std::string, long> snapshot() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return counts_;
    }

    void reset() {
        std::lock_guard<std::mutex> lock(mutex_);
        counts_.clear();
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, long> counts_;
};

SolveLedger& ledger();

}  // namespace boed
