#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "rtmix/dataset.hpp"
#include "test_util.hpp"

using namespace rtmix;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/rtmix_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_csv on a minimal well-formed file") {
  const auto path = write_temp("min.csv",
                               "subject,item,condition,rt\n"
                               "s1,i1,+1,350\n"
                               "s1,i2,-1,420\n");
  const Dataset d = load_csv(path);
  CHECK(d.n_subjects() == 1);
  CHECK(d.n_items() == 2);
  CHECK(d.size() == 2);
  CHECK(d.trials()[0].condition == 1);
  CHECK(d.trials()[0].rt == doctest::Approx(350.0));
  CHECK(d.subject_labels()[0] == "s1");
  CHECK(d.item_labels()[1] == "i2");
  std::remove(path.c_str());
}

TEST_CASE("labels are remapped densely in first-appearance order") {
  const auto path = write_temp("remap.csv",
                               "subject,item,condition,rt\n"
                               "zz,b,+1,300\n"
                               "aa,b,-1,310\n"
                               "zz,a,-1,320\n"
                               "aa,a,+1,330\n");
  const Dataset d = load_csv(path);
  CHECK(d.n_subjects() == 2);
  CHECK(d.subject_labels()[0] == "zz");  // first appearance wins
  CHECK(d.subject_labels()[1] == "aa");
  CHECK(d.trials()[1].subject == 2);
  CHECK(d.item_labels()[0] == "b");
  std::remove(path.c_str());
}

TEST_CASE("row-level errors carry the file line") {
  const auto path = write_temp("rt0.csv",
                               "subject,item,condition,rt\n"
                               "s1,i1,+1,350\n"
                               "s1,i2,-1,0\n");
  CHECK_THROWS_WITH_AS(load_csv(path), "non-positive reading time, line 3",
                       DataError);
  std::remove(path.c_str());

  const auto path2 = write_temp("badcond.csv",
                                "subject,item,condition,rt\n"
                                "s1,i1,2,350\n"
                                "s1,i2,-1,420\n");
  try {
    load_csv(path2);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("condition must be +1 or -1") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
  std::remove(path2.c_str());

  const auto path3 = write_temp("nonnum.csv",
                                "subject,item,condition,rt\n"
                                "s1,i1,+1,abc\n");
  try {
    load_csv(path3);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("non-numeric") != std::string::npos);
  }
  std::remove(path3.c_str());
}

TEST_CASE("missing columns are schema errors naming the column") {
  const auto path = write_temp("nocol.csv",
                               "subject,item,rt\n"
                               "s1,i1,350\n");
  CHECK_THROWS_WITH_AS(load_csv(path), "missing column: condition", DataError);
  std::remove(path.c_str());
}

TEST_CASE("single-condition data is rejected at construction") {
  const auto path = write_temp("onecond.csv",
                               "subject,item,condition,rt\n"
                               "s1,i1,+1,350\n"
                               "s1,i2,+1,420\n");
  CHECK_THROWS_AS(load_csv(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("repeated subject-item pairs warn but load") {
  const auto path = write_temp("dup.csv",
                               "subject,item,condition,rt\n"
                               "s1,i1,+1,350\n"
                               "s1,i1,-1,420\n");
  const Dataset d = load_csv(path);
  CHECK(d.size() == 2);
  REQUIRE(d.warnings().size() == 1);
  CHECK(d.warnings()[0].find("repeated") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("load -> write -> load round trips the data") {
  const auto path = write_temp("rt_round.csv",
                               "subject,item,condition,rt\n"
                               "s7,iA,+1,350.25\n"
                               "s7,iB,-1,420\n"
                               "s9,iA,-1,501.5\n"
                               "s9,iB,+1,333\n");
  const Dataset d1 = load_csv(path);
  const std::string path2 = "/tmp/rtmix_test_rt_round2.csv";
  write_csv(d1, path2);
  const Dataset d2 = load_csv(path2);
  REQUIRE(d2.size() == d1.size());
  CHECK(d2.n_subjects() == d1.n_subjects());
  CHECK(d2.n_items() == d1.n_items());
  for (std::size_t k = 0; k < d1.size(); ++k) {
    CHECK(d2.trials()[k].condition == d1.trials()[k].condition);
    CHECK(d2.trials()[k].rt == d1.trials()[k].rt);
    CHECK(d2.trials()[k].subject == d1.trials()[k].subject);
    CHECK(d2.trials()[k].item == d1.trials()[k].item);
  }
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("condition_split partitions the trial indices") {
  const Dataset d = test::toy_dataset();  // conditions +,-,+,-,+,-
  const auto [plus, minus] = condition_split(d);
  CHECK(plus == std::vector<std::size_t>{0, 2, 4});
  CHECK(minus == std::vector<std::size_t>{1, 3, 5});

  // union covers everything, intersection empty
  std::vector<bool> seen(d.size(), false);
  for (auto k : plus) seen[k] = true;
  for (auto k : minus) {
    CHECK_FALSE(seen[k]);
    seen[k] = true;
  }
  for (bool s : seen) CHECK(s);
}

TEST_CASE("order is preserved by condition_split") {
  std::vector<Trial> trials = {{1, 1, -1, 100.0}, {1, 2, +1, 200.0}};
  const Dataset d(std::move(trials), 1, 2);
  const auto [plus, minus] = condition_split(d);
  CHECK(plus == std::vector<std::size_t>{1});
  CHECK(minus == std::vector<std::size_t>{0});
}

TEST_CASE("without_trial keeps dimensions for LOO refits") {
  const Dataset d = test::toy_dataset();
  const Dataset r = d.without_trial(0);
  CHECK(r.size() == d.size() - 1);
  CHECK(r.n_subjects() == d.n_subjects());
  CHECK(r.n_items() == d.n_items());
  CHECK(r.trials()[0].rt == d.trials()[1].rt);
  CHECK_THROWS_AS(d.without_trial(99), DataError);
}

TEST_CASE("dataset invariants") {
  // a subject index with no trials
  std::vector<Trial> gap = {{1, 1, +1, 100.0}, {3, 2, -1, 200.0}};
  CHECK_THROWS_AS(Dataset(std::move(gap), 3, 2), DataError);
  // non-positive rt
  std::vector<Trial> bad_rt = {{1, 1, +1, 0.0}, {1, 2, -1, 200.0}};
  CHECK_THROWS_AS(Dataset(std::move(bad_rt), 1, 2), DataError);
  // condition out of the sum-coding domain
  std::vector<Trial> bad_cond = {{1, 1, 2, 100.0}, {1, 2, -1, 200.0}};
  CHECK_THROWS_AS(Dataset(std::move(bad_cond), 1, 2), DataError);
}
