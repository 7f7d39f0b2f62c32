#include <doctest.h>

#include <sstream>

#include "fraudlens/bench.hpp"
#include "fraudlens/synth.hpp"

using namespace fraudlens;

TEST_CASE("bench with no sizes is empty") {
  CHECK(run_bench(SynthConfig{}, {}, 0).empty());
  std::ostringstream out;
  write_bench_csv({}, out);
  CHECK(out.str() == "n_txns,wall_seconds,per_txn_us\n");
}

TEST_CASE("bench reports one row per size") {
  SynthConfig c;
  c.n_honest_cards = 0;
  const std::vector<std::size_t> sizes = {2000, 4000, 8000};
  const auto rows = run_bench(c, sizes, 1);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].n_txns == sizes[i]);
    CHECK(rows[i].wall_seconds > 0.0);
    CHECK(rows[i].per_txn_us == doctest::Approx(rows[i].wall_seconds * 1e6 / sizes[i]));
  }
  std::ostringstream out;
  write_bench_csv(rows, out);
  std::size_t lines = 0;
  for (const char ch : out.str()) lines += ch == '\n';
  CHECK(lines == 4);
}
