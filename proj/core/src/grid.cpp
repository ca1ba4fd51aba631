#include "aada/active_loop.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace aada {

std::size_t GridResult::failures() const {
    return static_cast<std::size_t>(
        std::count_if(cells.begin(), cells.end(), [](const GridCellResult& c) { return !c.log; }));
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task) {
    if (n == 0) return;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

template <typename T>
std::vector<T> unique_in_order(const std::vector<T>& v) {
    std::vector<T> out;
    for (const auto& x : v) {
        if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    }
    return out;
}

} // namespace

GridResult compare_strategies(const RunConfig& base, const std::vector<TrainScheme>& schemes,
                              const std::vector<Strategy>& strategies,
                              const std::vector<std::uint64_t>& seeds, std::size_t workers,
                              const std::function<void(const GridCell&, const RunLog&)>& on_done) {
    base.validate();
    GridResult result;
    for (auto scheme : unique_in_order(schemes)) {
        for (auto strategy : unique_in_order(strategies)) {
            for (auto seed : unique_in_order(seeds)) {
                result.cells.push_back({{scheme, strategy, seed}, std::nullopt, {}});
            }
        }
    }
    std::mutex done_mutex;
    parallel_for(result.cells.size(), workers, [&](std::size_t i) {
        auto& cell = result.cells[i];
        try {
            RunConfig config = base;
            config.scheme = cell.cell.scheme;
            config.strategy = cell.cell.strategy;
            config.seeds = {cell.cell.seed};
            cell.log = run_aada(config, cell.cell.seed);
            if (on_done) {
                std::lock_guard lock(done_mutex);
                on_done(cell.cell, *cell.log);
            }
        } catch (const std::exception& e) {
            cell.log.reset();
            cell.error = e.what();
            if (cell.error.empty()) cell.error = "unknown error";
        }
    });
    std::vector<RunLog> ok;
    for (const auto& c : result.cells) {
        if (c.log) ok.push_back(*c.log);
    }
    if (!ok.empty()) result.curves = aggregate_curves(ok);
    return result;
}

} // namespace aada
