#include "gensyn/ingest.hpp"
#include "gensyn/schema.hpp"
#include "gensyn/tables.hpp"

#include "support/helpers.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>

using namespace gensyn;

TEST_CASE("demographic schema has the expected shape") {
    Schema schema = testutil::acs_schema();
    REQUIRE(schema.size() == 8);
    REQUIRE(tuple_space_size(schema) == 40320);
    REQUIRE(component_count(schema) == 40);
}

TEST_CASE("combined schema tuple space") {
    // 16*2*5*7*3*2*2*2*2
    Schema schema = testutil::combined_schema();
    REQUIRE(tuple_space_size(schema) == 53760);
}

TEST_CASE("two binary variables give four tuples") {
    Schema schema = testutil::binary_pair_schema();
    REQUIRE(tuple_space_size(schema) == 4);
}

TEST_CASE("schema validation rejects bad inputs") {
    SECTION("single variable") {
        REQUIRE_THROWS_AS(Schema({testutil::make_var("a", 2)}, {{}}), ConfigError);
    }
    SECTION("duplicate variable names") {
        REQUIRE_THROWS_AS(Schema({testutil::make_var("a", 2), testutil::make_var("a", 3)},
                                 {{}, {}}),
                          ConfigError);
    }
    SECTION("unknown parent") {
        REQUIRE_THROWS_AS(Schema({testutil::make_var("a", 2), testutil::make_var("b", 2)},
                                 {{}, {"income"}}),
                          ConfigError);
    }
    SECTION("duplicate category labels") {
        Variable v;
        v.name = "x";
        v.categories = {"one", "one"};
        REQUIRE_THROWS_AS(Schema({v, testutil::make_var("b", 2)}, {{}, {}}), ConfigError);
    }
}

TEST_CASE("schema config file round-trips") {
    std::string dir = testutil::scratch_dir("schema_roundtrip");
    Schema schema = testutil::acs_schema();
    write_schema(dir + "/schema.cfg", schema);
    Schema loaded = load_schema(dir + "/schema.cfg");
    REQUIRE(loaded.size() == schema.size());
    for (size_t k = 0; k < schema.size(); ++k) {
        REQUIRE(loaded.var(static_cast<int>(k)).name == schema.var(static_cast<int>(k)).name);
        REQUIRE(loaded.var(static_cast<int>(k)).categories ==
                schema.var(static_cast<int>(k)).categories);
        REQUIRE(loaded.parents(static_cast<int>(k)) == schema.parents(static_cast<int>(k)));
    }
}

TEST_CASE("config parse errors carry context") {
    std::string dir = testutil::scratch_dir("schema_errors");
    SECTION("unknown parent reference") {
        std::ofstream f(dir + "/bad.cfg");
        f << "[variable]\nname = a\ncategories = x, y\n";
        f << "[variable]\nname = b\ncategories = u, v\n";
        f << "[conditioning]\nb = income\n";
        f.close();
        REQUIRE_THROWS_AS(load_schema(dir + "/bad.cfg"), ConfigError);
    }
    SECTION("single variable config") {
        std::ofstream f(dir + "/single.cfg");
        f << "[variable]\nname = a\ncategories = x, y\n";
        f.close();
        REQUIRE_THROWS_AS(load_schema(dir + "/single.cfg"), ConfigError);
    }
}

TEST_CASE("flat index enumeration is a bijection") {
    Schema schema = testutil::acs_schema();
    TupleSpace space(schema);
    REQUIRE(space.size() == 40320);

    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::uint64_t> pick(0, space.size() - 1);
    for (int trial = 0; trial < 500; ++trial) {
        std::uint64_t idx = pick(rng);
        auto cats = space.unflatten(idx);
        REQUIRE(space.flat_index(cats) == idx);
        for (size_t k = 0; k < schema.size(); ++k)
            REQUIRE(space.category_of(idx, static_cast<int>(k)) == cats[k]);
    }
    // and the first/last corners
    REQUIRE(space.flat_index(space.unflatten(0)) == 0);
    REQUIRE(space.flat_index(space.unflatten(space.size() - 1)) == space.size() - 1);
}

TEST_CASE("normalize_auxiliary scales blocks to unit sums") {
    Schema schema = testutil::binary_pair_schema();
    AuxiliaryMatrix d3;
    d3.locations = {"l0", "l1"};
    d3.values = {{10, 30, 5, 5}, {1, 1, 2, 6}};
    auto norm = normalize_auxiliary(schema, d3);
    REQUIRE(norm.values[0][0] == Catch::Approx(0.25));
    REQUIRE(norm.values[0][1] == Catch::Approx(0.75));
    REQUIRE(norm.values[1][2] == Catch::Approx(0.25));
    REQUIRE(norm.values[1][3] == Catch::Approx(0.75));
}

TEST_CASE("normalize_auxiliary reports zero blocks with location and variable") {
    Schema schema = testutil::binary_pair_schema();
    AuxiliaryMatrix d3;
    d3.locations = {"county7", "l1"};
    d3.values = {{0, 0, 1, 1}, {1, 1, 1, 1}};
    try {
        normalize_auxiliary(schema, d3);
        FAIL("expected DataError");
    } catch (const DataError &e) {
        std::string msg = e.what();
        REQUIRE(msg.find("county7") != std::string::npos);
        REQUIRE(msg.find("a") != std::string::npos);
    }
}

TEST_CASE("normalize_auxiliary block sums check on a 3x(2+3) matrix") {
    // direct-summation oracle over a 2-variable (2 and 3 categories) matrix
    Schema schema({testutil::make_var("a", 2), testutil::make_var("b", 3)}, {{}, {}});
    AuxiliaryMatrix d3;
    d3.locations = {"l0", "l1", "l2"};
    d3.values = {{3, 9, 1, 2, 5}, {4, 4, 7, 2, 1}, {1, 7, 3, 3, 3}};
    auto norm = normalize_auxiliary(schema, d3);
    for (const auto &row : norm.values) {
        double block_a = row[0] + row[1];
        double block_b = row[2] + row[3] + row[4];
        REQUIRE(block_a == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(block_b == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("normalize_auxiliary is idempotent") {
    Schema schema = testutil::binary_pair_schema();
    AuxiliaryMatrix d3;
    d3.locations = {"l0", "l1"};
    d3.values = {{10, 30, 5, 5}, {8, 2, 3, 7}};
    auto once = normalize_auxiliary(schema, d3);
    auto twice = normalize_auxiliary(schema, once);
    for (size_t l = 0; l < once.values.size(); ++l)
        for (size_t c = 0; c < once.values[l].size(); ++c)
            REQUIRE(twice.values[l][c] == Catch::Approx(once.values[l][c]).margin(1e-15));
}

TEST_CASE("tables round-trip through their CSV formats") {
    std::string dir = testutil::scratch_dir("table_roundtrip");
    auto schema_ptr = testutil::harness_schema();
    const Schema &schema = *schema_ptr;

    MarginalTables d1(schema.size());
    std::mt19937_64 rng(3);
    for (size_t k = 0; k < schema.size(); ++k) {
        UnivariateTable t;
        t.variable = static_cast<int>(k);
        for (size_t c = 0; c < schema.var(static_cast<int>(k)).categories.size(); ++c)
            t.counts.push_back(static_cast<double>(rng() % 1000));
        d1.by_var[k] = t;
    }
    write_d1(dir + "/d1.csv", schema, d1);
    auto d1_loaded = load_d1(dir + "/d1.csv", schema);
    for (size_t k = 0; k < schema.size(); ++k)
        REQUIRE(d1_loaded.by_var[k]->counts == d1.by_var[k]->counts);

    ConditionalTables d2;
    {
        ConditionalTable t(schema, schema.index_of("poverty"),
                           {schema.index_of("gender"), schema.index_of("employment")});
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 2; ++c) t.cell(a, b, c) = static_cast<double>(rng() % 50);
        d2.tables.push_back(t);
        ConditionalTable s(schema, schema.index_of("marital"), {schema.index_of("age")});
        for (int a = 0; a < 3; ++a)
            for (int c = 0; c < 4; ++c) s.cell(a, 0, c) = static_cast<double>(rng() % 50);
        d2.tables.push_back(s);
    }
    write_d2(dir + "/d2.csv", schema, d2);
    auto d2_loaded = load_d2(dir + "/d2.csv", schema);
    REQUIRE(d2_loaded.tables.size() == 2);
    const auto *pt = d2_loaded.find(schema.index_of("poverty"));
    REQUIRE(pt != nullptr);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 2; ++c)
                REQUIRE(pt->cell(a, b, c) == d2.tables[0].cell(a, b, c));

    AuxiliaryMatrix d3;
    d3.locations = {"l0", "l1", "l2"};
    for (int l = 0; l < 3; ++l) {
        std::vector<double> row;
        for (size_t c = 0; c < component_count(schema); ++c)
            row.push_back(static_cast<double>(rng() % 100) / 7.0);
        d3.values.push_back(row);
    }
    write_d3(dir + "/d3.csv", schema, d3);
    auto d3_loaded = load_d3(dir + "/d3.csv", schema);
    REQUIRE(d3_loaded.locations == d3.locations);
    for (size_t l = 0; l < 3; ++l)
        for (size_t c = 0; c < d3.values[l].size(); ++c)
            REQUIRE(d3_loaded.values[l][c] == d3.values[l][c]);
}

TEST_CASE("remap section renames input labels at load time") {
    std::string dir = testutil::scratch_dir("remap");
    {
        std::ofstream f(dir + "/schema.cfg");
        f << "[variable]\nname = g\ncategories = male, female\n";
        f << "[variable]\nname = p\ncategories = below, above\n";
        f << "[remap]\ng:M = male\ng:F = female\n";
    }
    Schema schema = load_schema(dir + "/schema.cfg");
    {
        std::ofstream f(dir + "/d1.csv");
        f << "g,M,40\ng,F,60\np,below,30\np,above,70\n";
    }
    auto d1 = load_d1(dir + "/d1.csv", schema);
    REQUIRE(d1.by_var[0]->counts[0] == 40);
    REQUIRE(d1.by_var[0]->counts[1] == 60);
}

TEST_CASE("D2 loader rejects malformed rows") {
    std::string dir = testutil::scratch_dir("d2_errors");
    auto schema_ptr = testutil::harness_schema();
    {
        std::ofstream f(dir + "/bad.csv");
        f << "marital,age,-,young,extra,single,10\n"; // p2_cat must be '-'
    }
    REQUIRE_THROWS_AS(load_d2(dir + "/bad.csv", *schema_ptr), ConfigError);
}

TEST_CASE("D3 loader enforces schema column order") {
    std::string dir = testutil::scratch_dir("d3_errors");
    Schema schema = testutil::binary_pair_schema();
    {
        std::ofstream f(dir + "/bad.csv");
        f << "location,b:b0,b:b1,a:a0,a:a1\n";
        f << "l0,1,2,3,4\nl1,4,3,2,1\n";
    }
    REQUIRE_THROWS_AS(load_d3(dir + "/bad.csv", schema), ConfigError);
    {
        std::ofstream f(dir + "/single_row.csv");
        f << "location,a:a0,a:a1,b:b0,b:b1\n";
        f << "l0,1,2,3,4\n";
    }
    REQUIRE_THROWS_AS(load_d3(dir + "/single_row.csv", schema), DataError);
}
