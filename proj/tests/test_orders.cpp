#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "replen/orders.hpp"
#include "replen/util.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace replen;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "replen_test";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::trunc);
    f << text;
}

GeneratorConfig flat_config() {
    GeneratorConfig g;
    g.products = 4;
    g.days = 349;
    g.base_rate_min = g.base_rate_max = 5.0;
    g.dow_multipliers.fill(1.0);
    g.tod_multipliers.fill(1.0);
    g.outlier_prob = 0.0;
    g.seed = 2024;
    return g;
}

} // namespace

TEST_CASE("generator is deterministic per seed") {
    GeneratorConfig g = flat_config();
    const OrderLog a = generate_orders(g);
    const OrderLog b = generate_orders(g);
    CHECK(a == b);
    CHECK(a.num_periods() == 1396);

    g.seed = 2025;
    CHECK_FALSE(generate_orders(g) == a);

    CHECK(synthesize_catalog(flat_config()).count() == 4);
}

TEST_CASE("zero base rate gives an all-zero log") {
    GeneratorConfig g = flat_config();
    g.base_rate_min = g.base_rate_max = 0.0;
    const OrderLog log = generate_orders(g);
    CHECK(log.total_orders() == 0);
}

TEST_CASE("flat-config per-period means converge to the base rate") {
    const GeneratorConfig g = flat_config();
    const OrderLog log = generate_orders(g);
    const double n = static_cast<double>(log.num_periods());
    // Poisson(5): sigma of the mean over 1396 periods
    const double sigma = std::sqrt(5.0 / n);
    for (size_t i = 0; i < log.products(); ++i) {
        double mean = 0.0;
        for (int t = 0; t < log.num_periods(); ++t) mean += log.counts[t][i];
        mean /= n;
        CHECK(std::fabs(mean - 5.0) <= 3.0 * sigma);
    }
}

TEST_CASE("outliers inflate the mean above the base rate") {
    GeneratorConfig g = flat_config();
    g.outlier_prob = 0.05;
    const OrderLog log = generate_orders(g);
    double mean = 0.0;
    for (int t = 0; t < log.num_periods(); ++t)
        for (size_t i = 0; i < log.products(); ++i) mean += log.counts[t][i];
    mean /= static_cast<double>(log.num_periods()) * log.products();
    CHECK(mean > 5.0); // multiplicative U(3,6) outliers only push upward
}

TEST_CASE("export/ingest round-trip preserves the log exactly") {
    GeneratorConfig g = flat_config();
    g.products = 3;
    g.days = 5;
    const OrderLog log = generate_orders(g);
    const auto path = temp_file("roundtrip.csv");
    export_orders_csv(log, path.string());
    const OrderLog back = ingest_orders_csv(path.string(), 0, g.days);
    CHECK(back == log);
    CHECK(back.total_orders() == log.total_orders());
}

TEST_CASE("timestamp ingestion places a single order in period 0") {
    const auto path = temp_file("single.csv");
    write_file(path, "product_id,timestamp\nA,2023-01-02T03:15:00Z\n");
    const OrderLog log = ingest_orders_csv(path.string(), 0, 0);
    REQUIRE(log.products() == 1);
    CHECK(log.num_periods() == 4); // one day derived
    CHECK(log.counts[0][0] == 1);
    CHECK(log.total_orders() == 1);
}

TEST_CASE("ingestion reports malformed rows with line numbers") {
    const auto path = temp_file("broken.csv");
    write_file(path, "product_id,timestamp\nA,2023-01-02T03:15:00Z\nB,not-a-time\n");
    try {
        ingest_orders_csv(path.string(), 0, 0);
        FAIL("expected a parse error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }

    const auto headerless = temp_file("badheader.csv");
    write_file(headerless, "foo,bar\n1,2\n");
    CHECK_THROWS_AS(ingest_orders_csv(headerless.string(), 0, 0), std::runtime_error);
}

TEST_CASE("empty order file yields an empty log with a warning") {
    const auto path = temp_file("empty.csv");
    write_file(path, "product_id,timestamp\n");
    const OrderLog log = ingest_orders_csv(path.string(), 0, 2);
    CHECK(log.products() == 0);
    CHECK(log.total_orders() == 0);
    CHECK(log.num_periods() == 8);
}

TEST_CASE("source-schema ingestion respects the stated first-order weekday") {
    const auto path = temp_file("source.csv");
    // two customers; first orders on weekday 3 (Thursday) and 0 (Monday)
    write_file(path, "customer_id,product_id,day_of_week,days_since_prior\n"
                     "c1,A,3,\n"
                     "c1,A,5,2\n"
                     "c2,B,0,\n");
    const OrderLog log = ingest_orders_csv(path.string(), 7, 28);
    CHECK(log.total_orders() == 3);
    CHECK(log.num_periods() == 28 * 4);

    // recover the day-of-week of each populated period; start day is a Monday
    std::vector<int> dows;
    for (int t = 0; t < log.num_periods(); ++t)
        for (size_t i = 0; i < log.products(); ++i)
            for (uint32_t k = 0; k < log.counts[t][i]; ++k)
                dows.push_back((t / OrderLog::kPeriodsPerDay) % 7);
    REQUIRE(dows.size() == 3);

    // c1's first order on weekday 3, second 2 days later (weekday 5), c2 on 0
    std::vector<int> sorted(dows);
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 3, 5});

    // deterministic per seed
    const OrderLog again = ingest_orders_csv(path.string(), 7, 28);
    CHECK(again == log);

    CHECK_THROWS_AS(ingest_orders_csv(path.string(), 7, 0), std::runtime_error);
}

TEST_CASE("assign_metadata builds a catalog with per-shelf multipliers") {
    const auto path = temp_file("meta.csv");
    write_file(path,
               "product_id,label,unit_volume,unit_weight,shelf_capacity_units,spoilage_rate,"
               "threshold\n"
               "A,milk,0.5,1.1,100,0.05,0.1\n"
               "B,rice,0.3,0.9,200,0.0,0.1\n");
    const ProductCatalog cat = assign_metadata(path.string());
    REQUIRE(cat.count() == 2);
    CHECK(cat.unit_volume[0] == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(cat.unit_weight[1] == doctest::Approx(180.0).epsilon(1e-12));
    CHECK(cat.shelf_capacity[1] == 200.0);
    CHECK(cat.spoilage_rate[1] == 0.0);

    // round-trip through export
    const auto out = temp_file("meta_out.csv");
    export_metadata_csv(cat, out.string());
    const ProductCatalog back = assign_metadata(out.string());
    CHECK(back.ids == cat.ids);
    CHECK(back.unit_volume == cat.unit_volume);
    CHECK(back.spoilage_rate == cat.spoilage_rate);

    const auto dup = temp_file("meta_dup.csv");
    write_file(dup, "product_id,label,unit_volume,unit_weight,shelf_capacity_units,spoilage_rate,"
                    "threshold\nA,x,1,1,10,0,0.1\nA,y,1,1,10,0,0.1\n");
    CHECK_THROWS_AS(assign_metadata(dup.string()), std::runtime_error);

    const auto bad = temp_file("meta_bad.csv");
    write_file(bad, "product_id,label,unit_volume,unit_weight,shelf_capacity_units,spoilage_rate,"
                    "threshold\nA,x,0,1,10,0,0.1\n");
    CHECK_THROWS_AS(assign_metadata(bad.string()), std::runtime_error);
}

TEST_CASE("split is a contiguous prefix/suffix partition") {
    GeneratorConfig g = flat_config();
    const OrderLog log = generate_orders(g); // 1396 periods
    const auto [train, test] = split_log(log, {900, 496});
    CHECK(train.num_periods() == 900);
    CHECK(test.num_periods() == 496);
    CHECK(train.counts[899] == log.counts[899]);
    CHECK(test.counts[0] == log.counts[900]);
    CHECK(train.total_orders() + test.total_orders() == log.total_orders());

    CHECK_THROWS_AS(split_log(log, {0, 1396}), std::invalid_argument);
    CHECK_THROWS_AS(split_log(log, {900, 400}), std::invalid_argument);
}

TEST_CASE("calibrate_capacity scales the mean per-period order volume") {
    // constant orders: 2 units of A (vol 0.5 each), 4 of B (vol 0.25 each)
    OrderLog log;
    log.product_ids = {"A", "B"};
    log.counts.assign(10, {2, 4});
    ProductCatalog cat;
    cat.ids = {"A", "B"};
    cat.spoilage_rate = {0.0, 0.0};
    cat.shelf_capacity = {10.0, 20.0};
    cat.unit_volume = {0.5 * 10.0, 0.25 * 20.0};
    cat.unit_weight = {1.0 * 10.0, 1.0 * 20.0};
    cat.threshold = {0.1, 0.1};
    cat.shelf_life = {1.0, 1.0};
    cat.forecast_error_std = {0.0, 0.0};

    const CapacityConfig cap = calibrate_capacity(log, cat, 0.9, 0.5, 0.99);
    // per-period volume = 2*0.5 + 4*0.25 = 2.0; weight = 2*1 + 4*1 = 6
    CHECK(cap.v_max == doctest::Approx(0.9 * 2.0).epsilon(1e-12));
    CHECK(cap.c_max == doctest::Approx(0.9 * 6.0).epsilon(1e-12));

    const CapacityConfig exact = calibrate_capacity(log, cat, 1.0, 0.5, 0.99);
    CHECK(exact.v_max == doctest::Approx(2.0).epsilon(1e-12));

    OrderLog zero = log;
    for (auto& row : zero.counts) row = {0, 0};
    CHECK_THROWS_AS(calibrate_capacity(zero, cat, 0.9, 0.5, 0.99), std::invalid_argument);
}

TEST_CASE("normalized orders divide by shelf capacity") {
    OrderLog log;
    log.product_ids = {"A"};
    log.counts.assign(2, {5});
    ProductCatalog cat;
    cat.ids = {"A"};
    cat.spoilage_rate = {0.0};
    cat.shelf_capacity = {50.0};
    cat.unit_volume = {10.0};
    cat.unit_weight = {10.0};
    cat.threshold = {0.1};
    cat.shelf_life = {1.0};
    cat.forecast_error_std = {0.0};

    const auto w = normalized_orders(log, cat);
    CHECK(w[0][0] == doctest::Approx(0.1).epsilon(1e-15));

    ProductCatalog other = cat;
    other.ids = {"B"};
    CHECK_THROWS_AS(normalized_orders(log, other), std::invalid_argument);
    CHECK_THROWS_AS(reindex_log(log, other), std::invalid_argument);
}

TEST_CASE("reindex aligns log columns with the catalog order") {
    OrderLog log;
    log.product_ids = {"B", "A"};
    log.counts.assign(1, {7, 3});
    ProductCatalog cat;
    cat.ids = {"A", "B"};
    cat.spoilage_rate = {0.0, 0.0};
    cat.shelf_capacity = {1.0, 1.0};
    cat.unit_volume = {1.0, 1.0};
    cat.unit_weight = {1.0, 1.0};
    cat.threshold = {0.1, 0.1};
    cat.shelf_life = {1.0, 1.0};
    cat.forecast_error_std = {0.0, 0.0};

    const OrderLog fixed = reindex_log(log, cat);
    CHECK(fixed.product_ids == cat.ids);
    CHECK(fixed.counts[0] == std::vector<uint32_t>{3, 7});
}
