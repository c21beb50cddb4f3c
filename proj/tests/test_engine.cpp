#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "opser/event_queue.hpp"
#include "opser/rng.hpp"

using namespace opser;

TEST_CASE("events dispatch in nondecreasing time order") {
  EventQueue q;
  std::vector<int> fired;
  q.schedule(SimTime::from_us(50), EventKind::TimerExpiry, [&] { fired.push_back(2); });
  q.schedule(SimTime::from_us(0), EventKind::TimerExpiry, [&] { fired.push_back(1); });
  q.schedule(SimTime::from_us(100), EventKind::TimerExpiry, [&] { fired.push_back(3); });
  q.run_until(SimTime::from_us(1000));
  REQUIRE(fired == std::vector<int>{1, 2, 3});
  REQUIRE(q.now() == SimTime::from_us(1000));
}

TEST_CASE("an event at now+0 precedes any event at now+epsilon") {
  EventQueue q;
  std::vector<int> fired;
  q.schedule(SimTime::from_us(1), EventKind::TimerExpiry, [&] { fired.push_back(2); });
  q.schedule(SimTime::from_us(0), EventKind::TimerExpiry, [&] { fired.push_back(1); });
  q.dispatch_next();
  REQUIRE(fired == std::vector<int>{1});
}

TEST_CASE("equal timestamps dispatch in insertion order") {
  EventQueue q;
  std::vector<int> fired;
  for (int i = 0; i < 6; ++i) {
    q.schedule(SimTime::from_us(42), EventKind::TimerExpiry, [&fired, i] { fired.push_back(i); });
  }
  q.run_until(SimTime::from_us(42));
  REQUIRE(fired == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("cancellation prevents dispatch and is idempotent") {
  EventQueue q;
  int fired = 0;
  auto h = q.schedule(SimTime::from_us(10), EventKind::TimerExpiry, [&] { ++fired; });
  REQUIRE(q.cancel(h));
  REQUIRE_FALSE(q.cancel(h));  // cancelling twice is a no-op
  q.run_until(SimTime::from_us(100));
  REQUIRE(fired == 0);
}

TEST_CASE("scheduling in the past aborts") {
  EventQueue q;
  q.schedule(SimTime::from_us(10), EventKind::TimerExpiry, [] {});
  q.run_until(SimTime::from_us(10));
  REQUIRE_THROWS_AS(q.schedule(SimTime::from_us(5), EventKind::TimerExpiry, [] {}),
                    std::logic_error);
}

TEST_CASE("run_until with nothing queued just advances the clock") {
  EventQueue q;
  q.run_until(SimTime::from_seconds(100.0));
  REQUIRE(q.now().seconds() == Catch::Approx(100.0));
  REQUIRE(q.dispatched() == 0);
}

TEST_CASE("run_until zero dispatches nothing scheduled later") {
  EventQueue q;
  int fired = 0;
  q.schedule(SimTime::from_us(5), EventKind::TimerExpiry, [&] { ++fired; });
  q.run_until(SimTime::from_us(0));
  REQUIRE(fired == 0);
}

TEST_CASE("clock is monotone across every dispatch") {
  EventQueue q;
  RngStream rng(7, 1);
  SimTime last{};
  for (int i = 0; i < 200; ++i) {
    q.schedule(SimTime::from_us(static_cast<std::int64_t>(rng.uniform_int(5000))),
               EventKind::TimerExpiry, [&] {
                 REQUIRE(q.now() >= last);
                 last = q.now();
                 if (q.now().us < 4000) {
                   q.schedule_in(SimTime::from_us(17), EventKind::TimerExpiry, [] {});
                 }
               });
  }
  q.run_until(SimTime::from_us(10000));
}

TEST_CASE("identical streams replay identically, distinct streams differ") {
  RngStream a(99, 5), b(99, 5), c(99, 6);
  bool any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    auto va = a.next_u64();
    REQUIRE(va == b.next_u64());
    if (va != c.next_u64()) any_diff = true;
  }
  REQUIRE(any_diff);
}

TEST_CASE("uniform_int stays in range and covers the support") {
  RngStream rng(3, 0);
  std::vector<int> seen(8, 0);
  for (int i = 0; i < 8000; ++i) {
    auto v = rng.uniform_int(8);
    REQUIRE(v < 8);
    ++seen[v];
  }
  for (int count : seen) REQUIRE(count > 0);
}

TEST_CASE("normal draws have the requested spread") {
  RngStream rng(17, 2);
  const int n = 100000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal(0.0, 4.0);
    sum += x;
    sum2 += x * x;
  }
  double mean = sum / n;
  double sd = std::sqrt(sum2 / n - mean * mean);
  REQUIRE(std::fabs(mean) < 0.05);
  REQUIRE(sd == Catch::Approx(4.0).margin(0.1));
}
