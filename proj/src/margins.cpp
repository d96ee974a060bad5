#include "evcp/margins.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "evcp/error.hpp"

namespace evcp {

std::optional<Date> AngularSample::date_of(std::int64_t t) const {
    if (t < 1 || static_cast<std::size_t>(t) > calendar.size()) {
        return std::nullopt;
    }
    return calendar[static_cast<std::size_t>(t - 1)];
}

void AngularSample::validate() const {
    if (times.size() != angles.size() || radii.size() != angles.size()) {
        throw InputError("angular sample columns differ in length");
    }
    if (!calendar.empty() && calendar.size() != static_cast<std::size_t>(horizon)) {
        throw InputError("calendar length does not match the horizon");
    }
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (!(angles[i] > 0.0 && angles[i] < 1.0)) {
            throw InputError("angle at t=" + std::to_string(times[i]) + " is outside (0,1)");
        }
        if (!(radii[i] > 0.0) || !std::isfinite(radii[i])) {
            throw InputError("radius at t=" + std::to_string(times[i]) + " is not positive");
        }
        if (times[i] < 1 || times[i] > horizon) {
            throw InputError("time " + std::to_string(times[i]) + " is outside 1..horizon");
        }
        if (i > 0 && times[i] <= times[i - 1]) {
            throw InputError("times are not strictly increasing");
        }
    }
}

std::vector<double> rank_pareto_transform(std::span<const double> residuals) {
    const std::size_t n = residuals.size();
    if (n < 2) {
        throw InputError("rank transform needs at least two values");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return residuals[a] < residuals[b]; });
    std::vector<double> out(n);
    const double denom = static_cast<double>(n + 1);
    for (std::size_t r = 0; r < n; ++r) {
        const double rank = static_cast<double>(r + 1);
        out[order[r]] = 1.0 / (1.0 - rank / denom);
    }
    return out;
}

ParetoPairs to_pareto_pairs(const ResidualPairs& pairs) {
    ParetoPairs out;
    out.dates = pairs.dates;
    out.first = rank_pareto_transform(pairs.first);
    out.second = rank_pareto_transform(pairs.second);
    return out;
}

AngularSample make_angular_sample(const ParetoPairs& pairs) {
    if (pairs.size() == 0 || pairs.second.size() != pairs.first.size()) {
        throw InputError("angular sample needs a nonempty set of complete pairs");
    }
    AngularSample s;
    const std::size_t n = pairs.size();
    s.horizon = static_cast<std::int64_t>(n);
    s.times.resize(n);
    s.angles.resize(n);
    s.radii.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = pairs.first[i] + pairs.second[i];
        s.times[i] = static_cast<std::int64_t>(i + 1);
        s.radii[i] = r;
        s.angles[i] = pairs.first[i] / r;
    }
    if (pairs.dates.size() == n) {
        s.calendar = pairs.dates;
    }
    return s;
}

std::size_t exceedance_count(std::int64_t horizon, double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw InputError("quantile level must lie in (0,1)");
    }
    const double raw = (1.0 - q) * static_cast<double>(horizon);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

AngularSample threshold_exceedances(const AngularSample& sample, double q) {
    const std::size_t k = exceedance_count(sample.horizon, q);
    if (k == 0) {
        throw InputError("sample of " + std::to_string(sample.horizon) +
                         " observations is too small for level " + std::to_string(q));
    }
    if (k > sample.size()) {
        throw InputError("level " + std::to_string(q) + " asks for " + std::to_string(k) +
                         " exceedances but only " + std::to_string(sample.size()) + " remain");
    }
    std::vector<std::size_t> order(sample.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sample.radii[a] > sample.radii[b];
    });
    order.resize(k);
    std::sort(order.begin(), order.end());

    AngularSample out;
    out.horizon = sample.horizon;
    out.calendar = sample.calendar;
    out.level = q;
    double smallest = sample.radii[order.front()];
    for (std::size_t idx : order) {
        out.times.push_back(sample.times[idx]);
        out.angles.push_back(sample.angles[idx]);
        out.radii.push_back(sample.radii[idx]);
        smallest = std::min(smallest, sample.radii[idx]);
    }
    out.threshold = smallest;
    return out;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

void write_angular_sample(const AngularSample& sample, const std::filesystem::path& csv) {
    std::ofstream out(csv);
    if (!out) {
        throw InputError("cannot write " + csv.string());
    }
    out << std::setprecision(17);
    out << "t,date,w,r\n";
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto date = sample.date_of(sample.times[i]);
        out << sample.times[i] << ',' << (date ? format_date(*date) : std::string{}) << ','
            << sample.angles[i] << ',' << sample.radii[i] << '\n';
    }
    if (!out) {
        throw InputError("failed writing " + csv.string());
    }

    nlohmann::json side;
    side["horizon"] = sample.horizon;
    side["n"] = sample.size();
    side["threshold"] = sample.threshold ? nlohmann::json(*sample.threshold) : nlohmann::json();
    side["q"] = sample.level ? nlohmann::json(*sample.level) : nlohmann::json();
    nlohmann::json cal = nlohmann::json::array();
    for (const auto& d : sample.calendar) {
        cal.push_back(format_date(d));
    }
    side["calendar"] = std::move(cal);
    std::ofstream js(sidecar_path(csv));
    if (!js) {
        throw InputError("cannot write " + sidecar_path(csv).string());
    }
    js << side.dump(2) << '\n';
}

AngularSample read_angular_sample(const std::filesystem::path& csv) {
    std::ifstream in(csv);
    if (!in) {
        throw InputError("cannot open angles file " + csv.string());
    }
    AngularSample s;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line_no == 1 && line.rfind("t,", 0) == 0) {
            continue;
        }
        std::istringstream row(line);
        std::string t_text;
        std::string date_text;
        std::string w_text;
        std::string r_text;
        if (!std::getline(row, t_text, ',') || !std::getline(row, date_text, ',') ||
            !std::getline(row, w_text, ',') || !std::getline(row, r_text)) {
            throw InputError(csv.string() + ":" + std::to_string(line_no) +
                             ": malformed row, expected 't,date,w,r'");
        }
        try {
            std::size_t used = 0;
            s.times.push_back(std::stoll(t_text, &used));
            s.angles.push_back(std::stod(w_text));
            s.radii.push_back(std::stod(r_text));
        } catch (const std::exception&) {
            throw InputError(csv.string() + ":" + std::to_string(line_no) + ": malformed number");
        }
    }
    if (s.empty()) {
        throw InputError(csv.string() + ": no angles");
    }

    s.horizon = s.times.back();
    const auto side_path = sidecar_path(csv);
    if (std::filesystem::exists(side_path)) {
        std::ifstream js(side_path);
        nlohmann::json side;
        try {
            js >> side;
            s.horizon = side.at("horizon").get<std::int64_t>();
            if (side.contains("threshold") && !side["threshold"].is_null()) {
                s.threshold = side["threshold"].get<double>();
            }
            if (side.contains("q") && !side["q"].is_null()) {
                s.level = side["q"].get<double>();
            }
            if (side.contains("calendar")) {
                for (const auto& d : side["calendar"]) {
                    const auto parsed = parse_date(d.get<std::string>());
                    if (!parsed) {
                        throw InputError("bad calendar date in " + side_path.string());
                    }
                    s.calendar.push_back(*parsed);
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw InputError("malformed sidecar " + side_path.string() + ": " + e.what());
        }
    }
    s.validate();
    return s;
}

}  // namespace evcp
