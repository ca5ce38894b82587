#include <gtest/gtest.h>

#include <charconv>
#include <filesystem>

#include "toruslab/acceptance.hpp"
#include "toruslab/runner.hpp"

using namespace toruslab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("toruslab_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(Json, SpecRoundTrips) {
  Engine e = chain_engine(71, 0);
  for (int t = 0; t < 30; ++t) {
    WalkSpec s = acceptance::detail::random_exact_spec(e, 1 + t % 3, 1 + t % 4, 12);
    const Json j = to_json(s);
    EXPECT_EQ(to_json(spec_from_json(Json::parse(j.dump()))), j);
  }
  const Json fj = to_json(fp_fixedpoint());
  EXPECT_EQ(to_json(fp_spec_from_json(fj)), fj);
  auto m = FiniteMeasure::from_exact({{TorusPoint::exact({Rational(1, 3), Rational(1, 7)}), Rational(2, 5)},
                                      {TorusPoint::exact({Rational(0), Rational(1, 2)}), Rational(3, 5)}});
  EXPECT_EQ(to_json(measure_from_json(to_json(m))), to_json(m));
}

TEST(Json, RejectsUnknownFieldsAndBadValues) {
  Json s = to_json(std_sl2());
  s["extra"] = 1;
  EXPECT_EQ(kind_of([&] { (void)spec_from_json(s); }), ErrorKind::ConfigInvalid);
  s = to_json(std_sl2());
  s["generators"][0]["colour"] = "red";
  EXPECT_EQ(kind_of([&] { (void)spec_from_json(s); }), ErrorKind::ConfigInvalid);
  s = to_json(std_sl2());
  s["generators"][0]["weight"] = "1/3";
  EXPECT_EQ(kind_of([&] { (void)spec_from_json(s); }), ErrorKind::WeightsInvalid);
  s = to_json(std_sl2());
  s["generators"][0]["matrix"] = Json::parse("[[2,0],[0,1]]");
  EXPECT_EQ(kind_of([&] { (void)spec_from_json(s); }), ErrorKind::DeterminantNotOne);
  EXPECT_EQ(kind_of([&] { (void)rational_from_json("1/x"); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(rational_from_json(0.002), Rational(1, 500));
  EXPECT_EQ(rational_from_json("0.501"), Rational(501, 1000));
  EXPECT_FALSE(point_from_json(Json::parse("[0.25, 0]")).is_exact());
  EXPECT_TRUE(point_from_json(Json::parse("[\"1/4\", 0]")).is_exact());
}

TEST(Csv, QuotesAndLineEndings) {
  CsvWriter w({"a", "b"});
  w.values(std::string("x,y"), 1.5);
  w.values(std::string("say \"hi\""), 3);
  w.values(std::string("two\nlines"), 0.1);
  EXPECT_EQ(w.str(), "a,b\r\n\"x,y\",1.5\r\n\"say \"\"hi\"\"\",3\r\n\"two\nlines\",0.1\r\n");
  EXPECT_THROW(w.row({"only"}), Error);
}

TEST(Csv, FormatDoubleRoundTrips) {
  Engine e = chain_engine(72, 0);
  for (int t = 0; t < 10000; ++t) {
    const double v = std::ldexp(uniform01(e) - 0.5, static_cast<int>(acceptance::detail::pick(e, 200)) - 100);
    const std::string s = format_double(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v) << s;
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e300), "1e+300");
}

TEST(Runner, OrbitOfTheTrappedPoint) {
  auto rec = run({{"command", "orbit"}, {"spec", "trapped-q3"}});
  EXPECT_EQ(rec.result.at("q"), 3);
  EXPECT_EQ(rec.result.at("orbit_size"), 8);
  EXPECT_TRUE(rec.ok);
  EXPECT_EQ(rec.outputs.count("orbit_points.csv"), 1u);
  EXPECT_EQ(rec.version, TORUSLAB_VERSION);
}

TEST(Runner, DecayScanIsReproducibleAndStartsAtOne) {
  const Json cfg = {{"command", "decay-scan"},
                    {"spec", "std-sl2"},
                    {"seed", 9},
                    {"params", {{"x", "0.41,0.73"}, {"a", "1,0"}, {"n", "0,1,2,3"}, {"N", 2000}}}};
  auto r1 = run(cfg);
  auto r2 = run(cfg);
  EXPECT_EQ(r1.outputs.at("decay.csv"), r2.outputs.at("decay.csv"));
  EXPECT_EQ(r1.config_hash, r2.config_hash);
  EXPECT_NEAR(r1.result.at("rows")[0].at("value").get<double>(), 1.0, 1e-12);
  EXPECT_EQ(r1.outputs.at("decay.csv").substr(0, 16), "n,value,stderr\r\n");
  Json other = cfg;
  other["seed"] = 10;
  EXPECT_NE(run(other).config_hash, r1.config_hash);
}

TEST(Runner, WritesOutputsOnlyForValidConfigs) {
  const fs::path good = fresh_dir("good");
  auto rec = run({{"command", "fp-census"}, {"spec", "std-sl2"}, {"params", {{"p", 7}}}, {"out", good.string()}});
  EXPECT_TRUE(fs::exists(good / "census.csv"));
  EXPECT_TRUE(fs::exists(good / "run_record.json"));
  EXPECT_TRUE(fs::exists(good / "result.json"));
  for (const auto& entry : fs::directory_iterator(good)) EXPECT_NE(entry.path().extension(), ".tmp");
  fs::remove_all(good);

  const fs::path bad = fresh_dir("bad");
  Json spec = to_json(std_sl2());
  spec["generators"][1]["matrix"] = "not a matrix";
  EXPECT_EQ(kind_of([&] { (void)run({{"command", "orbit"}, {"spec", spec}, {"out", bad.string()}}); }),
            ErrorKind::ConfigInvalid);
  EXPECT_FALSE(fs::exists(bad));
  EXPECT_EQ(kind_of([&] {
              (void)run({{"command", "orbit"}, {"spec", "trapped-q3"}, {"params", {{"radius", 1}}}, {"out", bad.string()}});
            }),
            ErrorKind::ConfigInvalid);
  EXPECT_FALSE(fs::exists(bad));
  EXPECT_EQ(kind_of([&] { (void)run({{"command", "orbit"}, {"colour", 1}}); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([&] { (void)run({{"command", "fly"}}); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([&] { (void)run({{"command", "fp-census"}, {"fp_spec", {{"p", "five"}}}}); }), ErrorKind::ConfigInvalid);
  EXPECT_EQ(kind_of([&] { (void)run({{"command", "orbit"}, {"spec", "std-sl2"}, {"out", 7}}); }), ErrorKind::ConfigInvalid);
}

TEST(Runner, FailingVerdictClearsOk) {
  // An isometry cannot contract, so the contraction verdict is false.
  Json spec = {{"dim", 1},
               {"generators", Json::array({{{"label", "s"}, {"weight", "1"}, {"matrix", Json::parse("[[1]]")},
                                            {"translation", Json::array({"1/3"})}}})}};
  auto rec = run({{"command", "ch-fit"}, {"spec", spec}, {"params", {{"pairs", 16}, {"n_walk", 4}}}});
  EXPECT_FALSE(rec.verdicts.at("contracting").get<bool>());
  EXPECT_FALSE(rec.ok);
}

TEST(Runner, NamedSpecsAndCommandTable) {
  for (const auto& n : spec_names()) {
    if (n == "fp-fixedpoint") {
      EXPECT_EQ(fp_spec_from_config(n).p(), 5);
    } else {
      EXPECT_NO_THROW((void)spec_from_config(n));
    }
  }
  EXPECT_EQ(kind_of([] { (void)named_spec("nope"); }), ErrorKind::ConfigInvalid);
  for (const auto& c : command_names()) EXPECT_EQ(detail::commands().count(c), 1u) << c;
  EXPECT_EQ(detail::commands().size(), command_names().size());
  auto rec = run({{"command", "solzlin"}, {"params", {{"forms", Json::parse("[[2]]")}, {"point", "0.501"}, {"r", 0.002}}}});
  EXPECT_TRUE(rec.ok);
}
