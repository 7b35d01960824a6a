#include "replen/orders.hpp"
#include "replen/util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <stdexcept>

namespace replen {

namespace {

// period 0 of synthetic logs starts on a Monday
const int64_t kDefaultStartDay = days_from_civil(2023, 1, 2);

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    if (lo == hi) return lo;
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

std::string period_timestamp(int64_t start_day, int period) {
    const int64_t day = start_day + period / OrderLog::kPeriodsPerDay;
    const int hour = (period % OrderLog::kPeriodsPerDay) * 6;
    const CivilDate d = civil_from_days(day);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:00:00Z", d.year, d.month, d.day, hour);
    return buf;
}

struct Timestamp {
    int64_t day;
    int hour;
};

bool parse_timestamp(const std::string& s, Timestamp& out) {
    int y, mo, d, h, mi, se;
    if (std::sscanf(s.c_str(), "%d-%d-%dT%d:%d:%dZ", &y, &mo, &d, &h, &mi, &se) != 6) return false;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || se < 0 ||
        se > 60)
        return false;
    out.day = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    out.hour = h;
    return true;
}

[[noreturn]] void bad_row(const std::string& path, size_t line, const std::string& why) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + why);
}

} // namespace

uint64_t OrderLog::total_orders() const {
    uint64_t total = 0;
    for (const auto& period : counts)
        for (uint32_t c : period) total += c;
    return total;
}

void GeneratorConfig::validate() const {
    if (products < 1) throw std::invalid_argument("generator: products < 1");
    if (days < 1) throw std::invalid_argument("generator: days < 1");
    if (base_rate_min < 0.0 || base_rate_max < base_rate_min)
        throw std::invalid_argument("generator: bad base rate range");
    for (double m : dow_multipliers)
        if (m < 0.0) throw std::invalid_argument("generator: negative dow multiplier");
    for (double m : tod_multipliers)
        if (m < 0.0) throw std::invalid_argument("generator: negative tod multiplier");
    if (outlier_prob < 0.0 || outlier_prob > 1.0)
        throw std::invalid_argument("generator: outlier_prob outside [0,1]");
    if (spoilage_min < 0.0 || spoilage_max < spoilage_min)
        throw std::invalid_argument("generator: bad spoilage range");
    if (unit_volume_min <= 0.0 || unit_weight_min <= 0.0 || shelf_capacity_min <= 0.0)
        throw std::invalid_argument("generator: non-positive metadata range");
    if (threshold < 0.0 || threshold >= 1.0)
        throw std::invalid_argument("generator: threshold outside [0,1)");
}

OrderLog generate_orders(const GeneratorConfig& config) {
    config.validate();
    std::mt19937_64 rng(mix_seed(config.seed, 11));

    std::vector<double> rate(config.products);
    for (double& r : rate) r = log_uniform(rng, config.base_rate_min, config.base_rate_max);

    OrderLog log;
    log.start_day = kDefaultStartDay;
    for (int i = 0; i < config.products; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "P%03d", i);
        log.product_ids.emplace_back(buf);
    }
    const int periods = config.days * OrderLog::kPeriodsPerDay;
    log.counts.assign(periods, std::vector<uint32_t>(config.products, 0));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int t = 0; t < periods; ++t) {
        const int dow = (t / OrderLog::kPeriodsPerDay) % 7;
        const int tod = t % OrderLog::kPeriodsPerDay;
        const double season = config.dow_multipliers[dow] * config.tod_multipliers[tod];
        for (int i = 0; i < config.products; ++i) {
            const double lambda = rate[i] * season;
            uint32_t count = 0;
            if (lambda > 0.0) {
                std::poisson_distribution<uint32_t> pois(lambda);
                count = pois(rng);
            }
            if (config.outlier_prob > 0.0 && u01(rng) < config.outlier_prob) {
                std::uniform_real_distribution<double> mult(config.outlier_min, config.outlier_max);
                count = static_cast<uint32_t>(std::lround(count * mult(rng)));
            }
            log.counts[t][i] = count;
        }
    }
    return log;
}

ProductCatalog synthesize_catalog(const GeneratorConfig& config) {
    config.validate();
    std::mt19937_64 rng(mix_seed(config.seed, 12));

    ProductCatalog cat;
    for (int i = 0; i < config.products; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "P%03d", i);
        cat.ids.emplace_back(buf);
        const double unit_volume = log_uniform(rng, config.unit_volume_min, config.unit_volume_max);
        const double unit_weight = log_uniform(rng, config.unit_weight_min, config.unit_weight_max);
        const double capacity =
            std::floor(log_uniform(rng, config.shelf_capacity_min, config.shelf_capacity_max));
        cat.spoilage_rate.push_back(log_uniform(rng, std::max(config.spoilage_min, 1e-6),
                                                std::max(config.spoilage_max, 1e-6)));
        cat.unit_volume.push_back(unit_volume * capacity);
        cat.unit_weight.push_back(unit_weight * capacity);
        cat.threshold.push_back(config.threshold);
        cat.shelf_capacity.push_back(capacity);
    }
    if (config.spoilage_min == 0.0) cat.spoilage_rate.front() = 0.0; // keep the a=0 branch reachable
    cat.shelf_life.assign(config.products, 1.0);
    cat.forecast_error_std.assign(config.products, 0.0);
    cat.validate();
    return cat;
}

OrderLog ingest_orders_csv(const std::string& path, uint64_t seed, int horizon_days) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string header;
    if (!std::getline(f, header)) {
        std::cerr << "warning: " << path << " is empty\n";
        return {};
    }
    const auto cols = split(trim(header), ',');

    std::map<std::string, size_t> product_index;
    std::vector<std::string> ids;
    auto product_of = [&](const std::string& id) {
        auto [it, inserted] = product_index.try_emplace(id, ids.size());
        if (inserted) ids.push_back(id);
        return it->second;
    };

    // (day, hour, product) events, aggregated after the horizon is known
    struct Event {
        int64_t day;
        int hour;
        size_t product;
    };
    std::vector<Event> events;
    std::string line;
    size_t lineno = 1;

    if (cols == std::vector<std::string>{"product_id", "timestamp"}) {
        while (std::getline(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto fields = split(line, ',');
            if (fields.size() != 2) bad_row(path, lineno, "expected 2 fields");
            Timestamp ts;
            if (!parse_timestamp(trim(fields[1]), ts)) bad_row(path, lineno, "bad timestamp");
            events.push_back({ts.day, ts.hour, product_of(trim(fields[0]))});
        }
    } else if (cols == std::vector<std::string>{"customer_id", "product_id", "day_of_week",
                                                "days_since_prior"}) {
        if (horizon_days <= 0)
            throw std::runtime_error(path + ": source schema requires a positive horizon");
        struct Customer {
            int64_t day = -1;
            std::mt19937_64 rng{0};
        };
        std::map<std::string, Customer> customers;
        while (std::getline(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            const auto fields = split(line, ',');
            if (fields.size() != 4) bad_row(path, lineno, "expected 4 fields");
            const std::string cust = trim(fields[0]);
            const std::string dow_s = trim(fields[2]);
            const std::string gap_s = trim(fields[3]);
            int dow = -1;
            try {
                dow = std::stoi(dow_s);
            } catch (...) {
                bad_row(path, lineno, "bad day_of_week");
            }
            if (dow < 0 || dow > 6) bad_row(path, lineno, "day_of_week outside 0..6");

            auto [it, inserted] = customers.try_emplace(cust);
            Customer& c = it->second;
            if (inserted) c.rng.seed(mix_seed(seed, fnv1a(cust)));
            if (c.day < 0) {
                // first order: uniform over in-horizon days with the stated weekday
                const int first_dow = weekday_from_days(kDefaultStartDay); // Monday
                (void)first_dow;
                const int offset = dow; // start day is Monday == weekday 0
                const int n_candidates = (horizon_days - 1 - offset) / 7 + 1;
                if (n_candidates <= 0) bad_row(path, lineno, "weekday outside horizon");
                const int pick = static_cast<int>(c.rng() % static_cast<uint64_t>(n_candidates));
                c.day = kDefaultStartDay + offset + 7 * pick;
            } else {
                if (gap_s.empty() || gap_s == "NA") bad_row(path, lineno, "repeat order without gap");
                int gap = 0;
                try {
                    gap = std::stoi(gap_s);
                } catch (...) {
                    bad_row(path, lineno, "bad days_since_prior");
                }
                if (gap < 0) bad_row(path, lineno, "negative days_since_prior");
                c.day += gap;
            }
            if (c.day >= kDefaultStartDay + horizon_days) continue; // past the horizon, dropped
            const int hour = static_cast<int>(c.rng() % 4) * 6;
            events.push_back({c.day, hour, product_of(trim(fields[1]))});
        }
    } else {
        throw std::runtime_error(path + ": unrecognised header '" + trim(header) + "'");
    }

    OrderLog log;
    log.product_ids = std::move(ids);
    if (events.empty()) {
        std::cerr << "warning: " << path << " has no order rows\n";
        log.start_day = kDefaultStartDay;
        log.counts.assign(std::max(horizon_days, 0) * OrderLog::kPeriodsPerDay,
                          std::vector<uint32_t>(log.product_ids.size(), 0));
        return log;
    }

    int64_t start = kDefaultStartDay;
    int days = horizon_days;
    if (cols[0] == "product_id") {
        start = events.front().day;
        for (const Event& e : events) start = std::min(start, e.day);
        if (days <= 0) {
            int64_t last = start;
            for (const Event& e : events) last = std::max(last, e.day);
            days = static_cast<int>(last - start + 1);
        }
    }
    log.start_day = start;
    log.counts.assign(static_cast<size_t>(days) * OrderLog::kPeriodsPerDay,
                      std::vector<uint32_t>(log.product_ids.size(), 0));
    for (const Event& e : events) {
        const int64_t period = (e.day - start) * OrderLog::kPeriodsPerDay + e.hour / 6;
        if (period < 0 || period >= log.num_periods())
            throw std::runtime_error(path + ": timestamp outside the configured horizon");
        ++log.counts[static_cast<size_t>(period)][e.product];
    }
    return log;
}

void export_orders_csv(const OrderLog& log, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "product_id,timestamp\n";
    for (int t = 0; t < log.num_periods(); ++t) {
        const std::string ts = period_timestamp(log.start_day, t);
        for (size_t i = 0; i < log.products(); ++i)
            for (uint32_t k = 0; k < log.counts[t][i]; ++k)
                f << log.product_ids[i] << ',' << ts << '\n';
    }
}

ProductCatalog assign_metadata(const std::string& csv_path) {
    std::ifstream f(csv_path);
    if (!f) throw std::runtime_error("cannot open " + csv_path);
    std::string header;
    if (!std::getline(f, header)) throw std::runtime_error(csv_path + ": empty metadata file");
    const auto cols = split(trim(header), ',');
    const std::vector<std::string> expected{"product_id", "label",         "unit_volume",
                                            "unit_weight", "shelf_capacity_units",
                                            "spoilage_rate", "threshold"};
    if (cols != expected)
        throw std::runtime_error(csv_path + ": unrecognised metadata header");

    ProductCatalog cat;
    std::map<std::string, bool> seen;
    std::string line;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != expected.size()) bad_row(csv_path, lineno, "expected 7 fields");
        const std::string id = trim(fields[0]);
        if (seen.count(id)) bad_row(csv_path, lineno, "duplicate product id '" + id + "'");
        seen[id] = true;
        double uv, uw, capacity, rate, tau;
        try {
            uv = std::stod(fields[2]);
            uw = std::stod(fields[3]);
            capacity = std::stod(fields[4]);
            rate = std::stod(fields[5]);
            tau = std::stod(fields[6]);
        } catch (...) {
            bad_row(csv_path, lineno, "bad numeric field");
        }
        if (uv <= 0.0 || uw <= 0.0) bad_row(csv_path, lineno, "non-positive volume/weight");
        if (capacity <= 0.0) bad_row(csv_path, lineno, "non-positive shelf capacity");
        if (rate < 0.0) bad_row(csv_path, lineno, "negative spoilage rate");
        if (tau < 0.0 || tau >= 1.0) bad_row(csv_path, lineno, "threshold outside [0,1)");
        cat.ids.push_back(id);
        cat.unit_volume.push_back(uv * capacity); // per-shelf multiplier
        cat.unit_weight.push_back(uw * capacity);
        cat.shelf_capacity.push_back(capacity);
        cat.spoilage_rate.push_back(rate);
        cat.threshold.push_back(tau);
    }
    if (cat.ids.empty()) throw std::runtime_error(csv_path + ": no products");
    cat.shelf_life.assign(cat.ids.size(), 1.0);
    cat.forecast_error_std.assign(cat.ids.size(), 0.0);
    cat.validate();
    return cat;
}

void export_metadata_csv(const ProductCatalog& catalog, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "product_id,label,unit_volume,unit_weight,shelf_capacity_units,spoilage_rate,threshold\n";
    char buf[256];
    for (size_t i = 0; i < catalog.count(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,synthetic,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      catalog.ids[i].c_str(), catalog.unit_volume[i] / catalog.shelf_capacity[i],
                      catalog.unit_weight[i] / catalog.shelf_capacity[i], catalog.shelf_capacity[i],
                      catalog.spoilage_rate[i], catalog.threshold[i]);
        f << buf;
    }
}

std::pair<OrderLog, OrderLog> split_log(const OrderLog& log, const SplitConfig& config) {
    if (config.train_periods < 1 || config.test_periods < 1)
        throw std::invalid_argument("split: both parts must be non-empty");
    if (config.train_periods + config.test_periods != log.num_periods())
        throw std::invalid_argument("split: parts do not sum to the horizon");

    OrderLog train, test;
    train.product_ids = test.product_ids = log.product_ids;
    train.start_day = log.start_day;
    test.start_day = log.start_day + config.train_periods / OrderLog::kPeriodsPerDay;
    train.counts.assign(log.counts.begin(), log.counts.begin() + config.train_periods);
    test.counts.assign(log.counts.begin() + config.train_periods, log.counts.end());
    return {std::move(train), std::move(test)};
}

CapacityConfig calibrate_capacity(const OrderLog& log, const ProductCatalog& catalog,
                                  double tightness, double alpha, double gamma) {
    if (!(tightness > 0.0)) throw std::invalid_argument("calibrate_capacity: tightness <= 0");
    if (log.total_orders() == 0) throw std::invalid_argument("calibrate_capacity: zero-order log");
    const auto orders = normalized_orders(log, catalog);
    double vol = 0.0, wgt = 0.0;
    for (const auto& period : orders)
        for (size_t i = 0; i < period.size(); ++i) {
            vol += catalog.unit_volume[i] * period[i];
            wgt += catalog.unit_weight[i] * period[i];
        }
    const double n = static_cast<double>(orders.size());
    CapacityConfig cap;
    cap.v_max = tightness * vol / n;
    cap.c_max = tightness * wgt / n;
    cap.alpha = alpha;
    cap.gamma = gamma;
    cap.validate();
    return cap;
}

std::vector<std::vector<double>> normalized_orders(const OrderLog& log,
                                                   const ProductCatalog& catalog) {
    if (log.product_ids != catalog.ids)
        throw std::invalid_argument("normalized_orders: product ids do not match the catalog");
    std::vector<std::vector<double>> out(log.counts.size(), std::vector<double>(log.products()));
    for (size_t t = 0; t < out.size(); ++t)
        for (size_t i = 0; i < log.products(); ++i)
            out[t][i] = static_cast<double>(log.counts[t][i]) / catalog.shelf_capacity[i];
    return out;
}

OrderLog reindex_log(const OrderLog& log, const ProductCatalog& catalog) {
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < log.product_ids.size(); ++i) index[log.product_ids[i]] = i;
    std::vector<size_t> source(catalog.count());
    for (size_t i = 0; i < catalog.count(); ++i) {
        const auto it = index.find(catalog.ids[i]);
        if (it == index.end())
            throw std::invalid_argument("reindex_log: catalog product '" + catalog.ids[i] +
                                        "' missing from the log");
        source[i] = it->second;
    }
    OrderLog out;
    out.product_ids = catalog.ids;
    out.start_day = log.start_day;
    out.counts.assign(log.counts.size(), std::vector<uint32_t>(catalog.count(), 0));
    for (size_t t = 0; t < log.counts.size(); ++t)
        for (size_t i = 0; i < catalog.count(); ++i) out.counts[t][i] = log.counts[t][source[i]];
    return out;
}

} // namespace replen
