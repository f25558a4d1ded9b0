#include "doctest.h"

#include "cocylab/runner.hpp"

#include <cmath>
#include <sstream>

using namespace cocylab;

namespace {

Json diagonal_config() {
  return Json::parse(R"({
    "base": {"bernoulli": [0.5, 0.5]},
    "cocycle": {"symbols": 2, "generators": [[[3, 0], [0, 0.3333333333333333]], [[2, 0], [0, 0.5]]]},
    "seed": 5,
    "params": {"n": 20000, "chains": 4}
  })");
}

std::string message_of(const std::string& cmd, const Json& cfg) {
  try {
    run_experiment(cmd, cfg);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("report layout") {
  const auto out = run_experiment("lyapunov", diagonal_config());
  std::vector<std::string> keys;
  for (const auto& [k, v] : out.report.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"version", "command", "seed", "threads", "config", "result", "wall_time"});
  CHECK(out.report["version"] == kVersion);
  CHECK(out.report["seed"] == 5);
  CHECK(out.report["config"]["params"]["batches"] == 5);
  const double l1 = out.report["result"]["exponents"][0].get<double>();
  const double se = out.report["result"]["stderrs"][0].get<double>();
  CHECK(std::abs(l1 - 0.5 * (std::log(3.0) + std::log(2.0))) < 3.0 * se);
  CHECK(out.csv.rfind("index,exponent,stderr\n1,", 0) == 0);
}

TEST_CASE("same config and seed give the same numbers") {
  auto cfg = diagonal_config();
  const auto a = run_experiment("lyapunov", cfg);
  const auto b = run_experiment("lyapunov", cfg, {std::nullopt, 3});
  CHECK(numerical_content(a.report).dump() == numerical_content(b.report).dump());
  CHECK(a.csv == b.csv);

  cfg.erase("seed");
  const auto drawn = run_experiment("lyapunov", cfg);
  const auto seed = drawn.report["seed"].get<std::uint64_t>();
  CHECK(drawn.report["config"]["seed"] == seed);
  const auto again = run_experiment("lyapunov", cfg, {seed, std::nullopt});
  CHECK(numerical_content(drawn.report).dump() == numerical_content(again.report).dump());
}

TEST_CASE("validation errors") {
  const Json bad_row = Json::parse(R"({
    "base": {"symbols": 2, "memory": 1, "transitions": [[0.5, 0.5], [0.6, 0.3]]},
    "cocycle": {"symbols": 2, "generators": [2, 0.5]}, "seed": 1})");
  CHECK(message_of("lyapunov", bad_row).find("row 1") != std::string::npos);

  auto cfg = diagonal_config();
  cfg["colour"] = "red";
  CHECK(message_of("lyapunov", cfg).find("unknown key 'colour'") != std::string::npos);

  cfg = diagonal_config();
  cfg["params"]["chians"] = 3;
  CHECK(message_of("lyapunov", cfg).find("unknown key 'chians'") != std::string::npos);

  cfg = diagonal_config();
  cfg["params"]["n"] = "many";
  CHECK(message_of("lyapunov", cfg).find("wrong type") != std::string::npos);

  CHECK(message_of("spectra", diagonal_config()).find("unknown subcommand") != std::string::npos);
  CHECK(message_of("schrodinger", Json::object()).find("missing mode") != std::string::npos);
  CHECK(message_of("schrodinger sweep", Json::object()).find("unknown mode") != std::string::npos);
  CHECK(message_of("lyapunov", Json::parse(R"({"example": "nope"})")).find("unknown example") != std::string::npos);
  CHECK(message_of("lyapunov", Json::parse(R"({"base": {"bernoulli": [0.5, 0.5]}})")).find("missing 'cocycle'") !=
        std::string::npos);
}

TEST_CASE("config parsing") {
  const auto b = parse_base(Json::parse(R"({"symbols": 2, "memory": 2,
      "transitions": [[0.5, 0.5], [1, 0], [0.2, 0.8], [0.3, 0.7]]})"));
  CHECK(b.memory() == 2);
  CHECK(b.prob(1, 0) == 1.0);
  CHECK_THROWS_AS(parse_base(Json::parse(R"({"transitions": [[0.5, 0.5]], "memory": 1})")), ValidationError);

  const auto a = parse_cocycle(Json::parse(R"({"symbols": 2, "depth": 2, "lead": 1,
      "generators": [1, 2, 3, 4]})"));
  CHECK(a.dim() == 1);
  CHECK(a.lead() == 1);
  CHECK(a.generator(3)(0, 0) == 4.0);
  CHECK_THROWS_AS(parse_cocycle(Json::parse(R"({"symbols": 2, "generators": [[[1, 0], [0]], 1]})")),
                  ValidationError);
}

TEST_CASE("every subcommand runs on a small config") {
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"ldt", R"({"example": "scalar", "seed": 1, "params": {"ns": [20, 40], "samples": 500}})"},
      {"clt", R"({"example": "scalar", "seed": 1, "params": {"n": 100, "samples": 200}})"},
      {"holder", R"({"example": "diagonal", "seed": 1, "params": {"n": 2000, "chains": 2}})"},
      {"holonomy", R"({"example": "bunched", "seed": 1, "params": {"pairs": 20}})"},
      {"reduce", R"({"example": "future", "seed": 1})"},
      {"typicality", R"({"example": "typical", "seed": 1})"},
      {"kappa", R"({"example": "rotations", "seed": 1, "params": {"ns": [1, 2], "cells": 90}})"},
      {"operator", R"({"base": {"bernoulli": [0.3, 0.7]}, "seed": 1})"},
      {"ldp", R"({"example": "scalar", "seed": 1})"},
      {"schrodinger trace", R"({"seed": 1})"},
      {"schrodinger periodic", R"({"seed": 1, "params": {"max_period": 3}})"},
      {"schrodinger scan",
       R"({"seed": 1, "params": {"energies": [0.5], "lambdas": [0.05], "n": 20000, "chains": 2}})"},
  };
  for (const auto& [cmd, cfg] : runs) {
    CAPTURE(cmd);
    const auto out = run_experiment(cmd, Json::parse(cfg));
    CHECK(out.report["command"] == cmd);
    CHECK(out.report["result"].is_object());
  }
  const auto k = run_experiment("kappa", Json::parse(runs[6].second));
  CHECK(k.report["result"]["min_kappa"] == 1.0);
}
