#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "adcc/abft.hpp"
#include "adcc/error.hpp"

using namespace adcc;

namespace {

DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  DenseMatrix m(rows.size(), rows.begin()->size());
  std::uint64_t i = 0;
  for (const auto& r : rows) {
    std::uint64_t j = 0;
    for (double v : r) m.at(i, j++) = v;
    ++i;
  }
  return m;
}

// Fully checksummed integer matrix built by hand (no library encoder).
DenseMatrix integer_full(std::uint64_t n, std::mt19937_64& rng) {
  DenseMatrix m(n + 1, n + 1);
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < n; ++j) m.at(i, j) = static_cast<double>(rng() % 201) - 100.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::uint64_t j = 0; j < n; ++j) s += m.at(i, j);
    m.at(i, n) = s;
  }
  for (std::uint64_t j = 0; j <= n; ++j) {
    double s = 0;
    for (std::uint64_t i = 0; i < n; ++i) s += m.at(i, j);
    m.at(n, j) = s;
  }
  return m;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{0};
}

}  // namespace

TEST(AbftEncoding, ColumnChecksum) {
  EXPECT_EQ(abft::encode_column_checksum(DenseMatrix(3, 2)), DenseMatrix(4, 2));
  const auto c = abft::encode_column_checksum(from_rows({{1, 2}, {3, 4}}));
  EXPECT_EQ(c, from_rows({{1, 2}, {3, 4}, {4, 6}}));
  EXPECT_EQ(abft::encode_column_checksum(from_rows({{7}})), from_rows({{7}, {7}}));
}

TEST(AbftEncoding, RowChecksum) {
  EXPECT_EQ(abft::encode_row_checksum(DenseMatrix(2, 3)), DenseMatrix(2, 4));
  const auto r = abft::encode_row_checksum(from_rows({{1, 2}, {3, 4}}));
  EXPECT_EQ(r, from_rows({{1, 2, 3}, {3, 4, 7}}));
  EXPECT_EQ(abft::encode_row_checksum(from_rows({{7}})), from_rows({{7, 7}}));
}

TEST(AbftEncoding, RandomEncodingVerifiesClean) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 50; ++t) {
    const std::uint64_t n = 1 + rng() % 64;
    DenseMatrix m(n, n);
    for (auto& v : m.data) v = u(rng);
    EXPECT_TRUE(abft::verify_checksums(abft::encode_full(m)).clean()) << n;
  }
}

TEST(AbftEncoding, ChecksumProductIdentity) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    const std::uint64_t n = 1 + rng() % 32;
    DenseMatrix a(n, n), b(n, n);
    for (auto& v : a.data) v = u(rng);
    for (auto& v : b.data) v = u(rng);
    const auto lhs = abft::multiply(abft::encode_column_checksum(a), abft::encode_row_checksum(b));
    EXPECT_LE(abft::relative_error(lhs, abft::encode_full(abft::multiply(a, b))), 1e-10);
  }
}

TEST(AbftVerify, SingleFlipIsLocalizedAndCorrected) {
  std::mt19937_64 rng(1);
  const DenseMatrix good = integer_full(4, rng);  // 5 x 5
  DenseMatrix m = good;
  m.at(2, 3) += 5;
  const auto v = abft::verify_checksums(m);
  EXPECT_EQ(v.bad_rows, (std::vector<std::uint64_t>{2}));
  EXPECT_EQ(v.bad_cols, (std::vector<std::uint64_t>{3}));
  ASSERT_EQ(v.correctable.size(), 1u);
  EXPECT_EQ(v.correctable[0], (std::pair<std::uint64_t, std::uint64_t>{2, 3}));
  EXPECT_EQ(abft::correct_single_errors(m, v), 1u);
  EXPECT_EQ(m, good);
  EXPECT_TRUE(abft::verify_checksums(m).clean());
}

TEST(AbftVerify, NoViolationsIsIdentity) {
  std::mt19937_64 rng(2);
  DenseMatrix m = integer_full(6, rng);
  const DenseMatrix before = m;
  EXPECT_EQ(abft::correct_single_errors(m, abft::verify_checksums(m)), 0u);
  EXPECT_EQ(m, before);
}

TEST(AbftVerify, TwoFlipsInOneRowAreNotCorrected) {
  std::mt19937_64 rng(4);
  DenseMatrix m = integer_full(6, rng);
  m.at(1, 1) += 3;
  m.at(1, 4) -= 7;
  const auto v = abft::verify_checksums(m);
  EXPECT_TRUE(v.correctable.empty());
  const DenseMatrix before = m;
  EXPECT_EQ(abft::correct_single_errors(m, v), 0u);
  EXPECT_EQ(m, before);
}

TEST(AbftVerify, ZeroedRowBlockIsNotCorrectable) {
  std::mt19937_64 rng(6);
  DenseMatrix m = integer_full(8, rng);
  for (std::uint64_t i = 2; i < 5; ++i)
    for (std::uint64_t j = 0; j <= 8; ++j) m.at(i, j) = 0;
  const auto v = abft::verify_checksums(m);
  EXPECT_TRUE(v.correctable.empty());
  EXPECT_FALSE(v.bad_cols.empty());
}

TEST(AbftVerify, ChecksumElementErrors) {
  std::mt19937_64 rng(10);
  const DenseMatrix good = integer_full(5, rng);
  for (auto [i, j] : {std::pair{5ul, 2ul}, std::pair{3ul, 5ul}, std::pair{5ul, 5ul}}) {
    DenseMatrix m = good;
    m.at(i, j) += 11;
    const auto v = abft::verify_checksums(m);
    abft::correct_single_errors(m, v);
    EXPECT_TRUE(abft::verify_checksums(m).clean()) << i << "," << j;
  }
}

TEST(AbftVerify, ShapeErrors) {
  EXPECT_EQ(code_of([] { abft::verify_checksums(DenseMatrix(1, 1)); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { abft::multiply(DenseMatrix(2, 3), DenseMatrix(2, 3)); }),
            ErrorCode::kShapeMismatch);
}

TEST(AbftConfig, Validation) {
  EXPECT_NO_THROW((abft::Config{48, 7}.validate()));
  EXPECT_NO_THROW((abft::Config{3, 4}.validate()));
  EXPECT_EQ(code_of([] { abft::Config{48, 5}.validate(); }), ErrorCode::kDivisibilityViolation);
  EXPECT_EQ(code_of([] { abft::Config{48, 0}.validate(); }), ErrorCode::kInvalidConfig);
}

TEST(AbftRun, SingleSubmultMatchesOracle) {
  const auto p = abft::make_problem(3, 5);
  SimEngine e(CacheConfig{});
  const auto r = abft::run(p, {3, 4}, e, CrashPlan::never());
  const auto& c = std::get<DenseMatrix>(r.outcome);
  EXPECT_LE(abft::relative_error(c, abft::reference_product(p)), 1e-12);
}

TEST(AbftRun, IdentityProduct) {
  abft::Problem p{DenseMatrix::identity(6), DenseMatrix::identity(6)};
  SimEngine e(CacheConfig{});
  const auto r = abft::run(p, {6, 7}, e, CrashPlan::never());
  const auto& c = std::get<DenseMatrix>(r.outcome);
  EXPECT_EQ(c, abft::encode_full(DenseMatrix::identity(6)));
  for (std::uint64_t j = 0; j < 6; ++j) EXPECT_EQ(c.at(6, j), 1.0);
}

TEST(AbftRun, FlushAccounting) {
  const auto p = abft::make_problem(48, 1);
  const abft::Config cfg{48, 7};
  SimEngine e(CacheConfig{});
  const auto r = abft::run(p, cfg, e, CrashPlan::never());
  const auto& h = r.handles;
  // Independent line count for one temporary's checksum row and column.
  std::uint64_t per_submult = 0;
  for (const auto& t : h.temps) {
    std::set<Address> lines;
    for (std::uint64_t j = 0; j < 49; ++j) lines.insert(t.address_of(48 * 49 + j) / 64);
    for (std::uint64_t i = 0; i < 49; ++i) lines.insert(t.address_of(i * 49 + 48) / 64);
    EXPECT_EQ(lines.size(), abft::checksum_lines_per_submult(h, 64));
    per_submult += lines.size();
  }
  std::uint64_t per_blocks = 0;
  for (std::uint64_t blk = 0; blk < 7; ++blk) {
    std::set<Address> lines;
    for (std::uint64_t i = blk * 7; i < blk * 7 + 7; ++i) lines.insert(h.c_temp.address_of(i * 49 + 48) / 64);
    per_blocks += lines.size();
  }
  // Progress scalars: one flush per submult and block plus the two end markers.
  EXPECT_EQ(e.counters().flush_ops, per_submult + per_blocks + 7 + 7 + 2);
}

TEST(AbftRecover, CrashBeforeAnySubmultRecomputesAll) {
  const auto p = abft::make_problem(13, 2);
  const abft::Config cfg{13, 7};
  SimEngine e(CacheConfig{});
  const auto r = abft::run(p, cfg, e, CrashPlan::after_op_count(0));
  ASSERT_TRUE(r.crashed());
  const auto& snap = std::get<CrashOutcome>(r.outcome).snapshot;
  const auto plan = abft::recover(snap, r.handles, cfg);
  EXPECT_EQ(plan.phase, abft::Phase::kNotStarted);
  EXPECT_EQ(plan.resume_submult, 1u);
  SimEngine fresh(CacheConfig{});
  EXPECT_LE(abft::relative_error(abft::finish(snap, p, cfg, plan, fresh), abft::reference_product(p)),
            1e-9);
}

TEST(AbftRecover, UnreadablePhase) {
  const auto p = abft::make_problem(6, 2);
  const abft::Config cfg{6, 7};
  SimEngine e(CacheConfig{});
  const auto r = abft::run(p, cfg, e, CrashPlan::never());
  NvmImage snap = e.crash();
  const std::int64_t bogus = 99;
  snap.write(r.handles.submult_progress.base, reinterpret_cast<const std::byte*>(&bogus), 8);
  EXPECT_EQ(code_of([&] { abft::recover(snap, r.handles, cfg); }), ErrorCode::kUnreadablePhase);
}

TEST(AbftRecover, CorrectsSingleCorruptedTemporary) {
  const auto p = abft::make_problem(13, 4);
  const abft::Config cfg{13, 7};
  SimEngine e(CacheConfig{64, 1 << 20, 0});
  const auto r = abft::run(p, cfg, e, CrashPlan::at_label(abft::kSubmultLabel, 2));
  ASSERT_TRUE(r.crashed());
  // Rebuild a snapshot where temp 1 is fully persisted except one element.
  NvmImage snap = std::get<CrashOutcome>(r.outcome).snapshot;
  const auto& t1 = r.handles.temps[0];
  // Recompute temp 1 on the host: rows of A_c times the first k rows of B_r.
  const auto ac = abft::padded_column_checksum(p.a);
  const auto br = abft::padded_row_checksum(p.b);
  DenseMatrix c1(14, 14);
  for (std::uint64_t i = 0; i < 14; ++i)
    for (std::uint64_t j = 0; j < 14; ++j) {
      double s = 0;
      for (std::uint64_t t = 0; t < 7; ++t) s += ac.at(i, t) * br.at(t, j);
      c1.at(i, j) = s;
    }
  c1.at(3, 5) += 0.75;
  snap.write(t1.base, reinterpret_cast<const std::byte*>(c1.data.data()), c1.data.size() * 8);
  const auto plan = abft::recover(snap, r.handles, cfg);
  EXPECT_EQ(plan.corrected_elements, 1u);
  EXPECT_EQ(std::count(plan.recompute_submults.begin(), plan.recompute_submults.end(), 1u), 0);
  SimEngine fresh(CacheConfig{});
  EXPECT_LE(abft::relative_error(abft::finish(snap, p, cfg, plan, fresh), abft::reference_product(p)),
            1e-9);
}

TEST(AbftRecover, ExhaustiveSmallCrashSweep) {
  const auto p = abft::make_problem(20, 3);
  const abft::Config cfg{20, 3};
  const auto ref = abft::reference_product(p);
  for (const char* label : {abft::kSubmultLabel, abft::kSubaddLabel}) {
    for (std::uint64_t occ = 1; occ <= cfg.submults(); ++occ) {
      SimEngine e(CacheConfig{64, 2048, 0});
      const auto r = abft::run(p, cfg, e, CrashPlan::at_label(label, occ));
      ASSERT_TRUE(r.crashed());
      const auto& snap = std::get<CrashOutcome>(r.outcome).snapshot;
      const auto plan = abft::recover(snap, r.handles, cfg);
      if (std::string(label) == abft::kSubaddLabel) {
        EXPECT_EQ(plan.recompute_addition_blocks, (std::vector<std::uint64_t>{occ}));
      } else {
        EXPECT_TRUE(std::count(plan.recompute_submults.begin(), plan.recompute_submults.end(), occ));
      }
      SimEngine fresh(CacheConfig{64, 2048, 0});
      EXPECT_LE(abft::relative_error(abft::finish(snap, p, cfg, plan, fresh), ref), 1e-9)
          << label << " " << occ;
    }
  }
}

TEST(AbftRecover, CrashAtArbitraryOpsRecovers) {
  const auto p = abft::make_problem(8, 12);
  const abft::Config cfg{8, 3};
  const auto ref = abft::reference_product(p);
  for (std::uint64_t ops = 0; ops < 6000; ops += 97) {
    SimEngine e(CacheConfig{64, 1024, 0});
    const auto r = abft::run(p, cfg, e, CrashPlan::after_op_count(ops));
    if (!r.crashed()) break;
    const auto& snap = std::get<CrashOutcome>(r.outcome).snapshot;
    const auto plan = abft::recover(snap, r.handles, cfg);
    SimEngine fresh(CacheConfig{64, 1024, 0});
    EXPECT_LE(abft::relative_error(abft::finish(snap, p, cfg, plan, fresh), ref), 1e-9) << ops;
  }
}

TEST(AbftNative, InPlaceVariantMatchesOracle) {
  const auto p = abft::make_problem(20, 5);
  const abft::Config cfg{20, 7};
  SimEngine e(CacheConfig{});
  const auto r = abft::run_native(p, cfg, e, CrashPlan::never());
  EXPECT_LE(abft::relative_error(std::get<DenseMatrix>(r.outcome), abft::reference_product(p)), 1e-12);
  EXPECT_EQ(e.counters().flush_ops, 0u);
  EXPECT_EQ(r.completed, 3u);
}
