#include "saddlekit/cli.hpp"
#include "saddlekit/kv_format.hpp"
#include "saddlekit/report.hpp"
#include "saddlekit/trace_io.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace saddlekit;

namespace {

std::string tmp_path(const std::string& name) {
  const std::filesystem::path dir = SADDLEKIT_TEST_TMPDIR;
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("solve exit codes") {
  const std::string csv = tmp_path("solve.csv");
  CHECK(cli({"solve", "--instance", "builtin:intro-qp", "--algo", "admm", "--out", csv}).code ==
        kExitConverged);
  CHECK(std::filesystem::exists(csv));
  CHECK(std::filesystem::exists(sidecar_path(csv, ".summary")));
  CHECK(std::filesystem::exists(sidecar_path(csv, ".active")));

  CHECK(cli({"solve", "--instance", "builtin:intro-qp", "--algo", "pdhg", "--max-iters", "10",
             "--out", tmp_path("short.csv")})
            .code == kExitIterationLimit);

  const Outcome missing = cli({"solve", "--instance", "/nonexistent.problem", "--algo", "pdhg"});
  CHECK(missing.code == kExitError);
  CHECK(missing.err.find("error:") != std::string::npos);

  CHECK(cli({"solve", "--instance", "builtin:intro-qp", "--algo", "nope"}).code == kExitError);
  CHECK(cli({"solve", "--algo", "pdhg"}).code == kExitError);
  CHECK(cli({"solve", "--instance", "builtin:intro-qp", "--algo", "pdhg", "--stepsize", "1.0"})
            .code == kExitError);
  CHECK(cli({"frobnicate"}).code == kExitError);
}

TEST_CASE("solve then analyze reports the degenerate index") {
  const std::string csv = tmp_path("pdhg.csv");
  const std::string report = tmp_path("pdhg.report");
  REQUIRE(cli({"solve", "--instance", "builtin:intro-qp", "--algo", "pdhg", "--out", csv}).code ==
          kExitConverged);
  REQUIRE(cli({"analyze", "--trace", csv, "--instance", "builtin:intro-qp", "--out", report})
              .code == kExitConverged);
  const KvDocument doc = parse_report(read_text_file(report));
  CHECK(doc.at("degenerate").as_word() == "true");
  CHECK(doc.at("B_d").as_list().size() == 1);
  CHECK(doc.at("B_d").as_list()[0].as_integer() == 2);
  CHECK(doc.at("k_star").as_integer() > 0);
  CHECK(doc.at("fit.post_rate").as_number() < doc.at("fit.pre_rate").as_number());

  const Outcome printed = cli({"analyze", "--trace", csv, "--instance", "builtin:intro-qp"});
  CHECK(printed.out == read_text_file(report));

  CHECK(cli({"analyze", "--trace", csv, "--instance", "builtin:intro-qp", "--eps", "1e-6"}).code ==
        kExitError);
  CHECK(cli({"analyze", "--trace", csv, "--instance", "builtin:rotated-house"}).code ==
        kExitError);
  CHECK(cli({"analyze", "--trace", tmp_path("absent.csv"), "--instance", "builtin:intro-qp"})
            .code == kExitError);
}

TEST_CASE("moduli command") {
  const Outcome ok = cli({"moduli", "--instance", "builtin:rotated-house", "--samples", "2000",
                          "--seed", "5"});
  REQUIRE(ok.code == kExitConverged);
  const KvDocument doc = parse_report(ok.out);
  CHECK(doc.at("alpha_G.estimate").as_number() <= 0.6 + 1e-9);
  CHECK(std::abs(doc.at("alpha_M.estimate").as_number() - 1.0) <= 1e-6);
  CHECK(doc.at("ordering_consistent").as_word() == "true");

  CHECK(cli({"moduli", "--instance", "builtin:rotated-house", "--samples", "0"}).code ==
        kExitError);
  CHECK(cli({"moduli", "--instance", "builtin:rotated-house", "--tau", "0", "--samples", "100"})
            .code == kExitError);
}

TEST_CASE("identical flags give identical bytes") {
  const std::vector<std::string> base = {"solve", "--instance", "builtin:rotated-house", "--algo",
                                         "egm", "--init", "sphere:3", "--seed", "17"};
  auto with_out = [&](const std::string& path) {
    auto args = base;
    args.push_back("--out");
    args.push_back(path);
    return args;
  };
  const std::string a = tmp_path("det_a.csv");
  const std::string b = tmp_path("det_b.csv");
  REQUIRE(cli(with_out(a)).code == kExitConverged);
  REQUIRE(cli(with_out(b)).code == kExitConverged);
  CHECK(read_text_file(a) == read_text_file(b));
  CHECK(read_text_file(sidecar_path(a, ".active")) == read_text_file(sidecar_path(b, ".active")));
  CHECK(read_text_file(sidecar_path(a, ".summary")) ==
        read_text_file(sidecar_path(b, ".summary")));

  const std::vector<std::string> mod = {"moduli", "--instance", "builtin:rotated-house",
                                        "--samples", "500", "--seed", "2"};
  CHECK(cli(mod).out == cli(mod).out);
}

TEST_CASE("builtin-list") {
  const Outcome o = cli({"builtin-list"});
  CHECK(o.code == kExitConverged);
  for (const char* name : {"intro-qp", "rotated-house", "trivial-lp"})
    CHECK(o.out.find(name) != std::string::npos);
}

TEST_CASE("batch runs jobs in parallel and keeps their order") {
  const std::string jobs = tmp_path("jobs.txt");
  std::ostringstream text;
  text << "# three solves\n";
  for (const char* algo : {"pdhg", "admm", "egm"})
    text << "solve --instance builtin:trivial-lp --algo " << algo << " --out "
         << tmp_path(std::string("batch_") + algo + ".csv") << "\n";
  write_text_file(jobs, text.str());

  const Outcome o = cli({"batch", jobs, "--jobs", "3"});
  CHECK(o.code == kExitConverged);
  const auto p = o.out.find("pdhg");
  const auto a = o.out.find("admm");
  const auto e = o.out.find("egm");
  CHECK(p < a);
  CHECK(a < e);
  CHECK(o.out == cli({"batch", jobs, "--jobs", "1"}).out);

  write_text_file(jobs, text.str() + "solve --instance builtin:intro-qp --algo pdhg --max-iters 3 --out " +
                            tmp_path("batch_short.csv") + "\n");
  CHECK(cli({"batch", jobs, "--jobs", "2"}).code == kExitIterationLimit);

  write_text_file(jobs, text.str() + "solve --instance builtin:nope --algo pdhg\n");
  CHECK(cli({"batch", jobs, "--jobs", "2"}).code == kExitError);
}
