#include "aada/run_log.hpp"

#include "aada/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace aada {

namespace {

// Everything that must agree between logs for their curves to be comparable.
RunConfig comparable_part(RunConfig c) {
    c.scheme = TrainScheme::Adversarial;
    c.strategy = Strategy::ImportanceWeight;
    c.seeds.clear();
    c.output_dir.clear();
    c.workers = 0;
    c.grid = {};
    return c;
}

} // namespace

std::vector<CurvePoint> aggregate_curves(const std::vector<RunLog>& logs) {
    if (logs.empty()) throw Error("aggregate_curves: no run logs");
    const RunConfig reference = comparable_part(logs.front().config);
    std::map<std::pair<TrainScheme, Strategy>, std::vector<const RunLog*>> groups;
    for (const auto& log : logs) {
        if (!(comparable_part(log.config) == reference)) {
            throw Error("aggregate_curves: run logs come from incompatible configs (seed " +
                        std::to_string(log.seed) + " differs from seed " +
                        std::to_string(logs.front().seed) + ")");
        }
        groups[{log.config.scheme, log.config.strategy}].push_back(&log);
    }

    std::vector<CurvePoint> out;
    for (auto& [key, members] : groups) {
        std::stable_sort(members.begin(), members.end(),
                         [](const RunLog* a, const RunLog* b) { return a->seed < b->seed; });
        const std::size_t n_rounds = members.front()->rounds.size();
        for (const auto* m : members) {
            if (m->rounds.size() != n_rounds) {
                throw Error("aggregate_curves: run with seed " + std::to_string(m->seed) +
                            " has a different number of rounds");
            }
        }
        for (std::size_t r = 0; r < n_rounds; ++r) {
            CurvePoint p;
            p.round = members.front()->rounds[r].round;
            p.n_labeled = members.front()->rounds[r].n_labeled;
            p.scheme = std::string(to_string(key.first));
            p.strategy = std::string(to_string(key.second));
            p.n_seeds = members.size();
            double sum = 0.0;
            for (const auto* m : members) {
                if (m->rounds[r].n_labeled != p.n_labeled) {
                    throw Error("aggregate_curves: label counts disagree at round " + std::to_string(r));
                }
                sum += m->rounds[r].accuracy;
            }
            p.mean_acc = sum / static_cast<double>(members.size());
            if (members.size() > 1) {
                double ss = 0.0;
                for (const auto* m : members) {
                    const double d = m->rounds[r].accuracy - p.mean_acc;
                    ss += d * d;
                }
                p.sd_acc = std::sqrt(ss / static_cast<double>(members.size() - 1));
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

void write_curves(std::ostream& out, const std::vector<CurvePoint>& curves) {
    out << kCurveHeader << '\n';
    char buf[96];
    for (const auto& p : curves) {
        out << p.round << ',' << p.n_labeled << ',' << p.scheme << ',' << p.strategy << ',';
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,", p.mean_acc, p.sd_acc);
        out << buf << p.n_seeds << '\n';
    }
}

void write_curves_file(const std::string& path, const std::vector<CurvePoint>& curves) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    write_curves(out, curves);
    if (!out) throw Error("write failed: " + path);
}

std::vector<CurvePoint> read_curves(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCurveHeader) {
        throw FormatError("curve table: missing or unexpected header");
    }
    std::vector<CurvePoint> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw FormatError("curve table line " + std::to_string(lineno) + ": expected 7 fields");
        try {
            CurvePoint p;
            p.round = std::stoull(f[0]);
            p.n_labeled = std::stoull(f[1]);
            p.scheme = f[2];
            p.strategy = f[3];
            p.mean_acc = std::stod(f[4]);
            p.sd_acc = std::stod(f[5]);
            p.n_seeds = std::stoull(f[6]);
            out.push_back(std::move(p));
        } catch (const std::logic_error&) {
            throw FormatError("curve table line " + std::to_string(lineno) + ": bad number");
        }
    }
    return out;
}

std::vector<CurvePoint> read_curves_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    return read_curves(in);
}

std::vector<CurvePoint> emit_curves(const std::vector<RunLog>& logs, const std::string& path) {
    auto curves = aggregate_curves(logs);
    write_curves_file(path, curves);
    return curves;
}

} // namespace aada
