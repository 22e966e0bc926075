#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "support.hpp"

using fbtest::run_cli;
using nlohmann::json;

namespace {

// Minimal draft-07 validator covering exactly the keywords the shipped
// schema uses: $ref into #/definitions, oneOf, type, enum, properties,
// required, additionalProperties, items, minItems, maxItems, minimum,
// exclusiveMinimum.
bool schema_valid(const json& schema, const json& root, const json& inst,
                  std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };

  if (schema.contains("$ref")) {
    std::string ref = schema["$ref"].get<std::string>();
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) return fail("unsupported $ref " + ref);
    return schema_valid(root["definitions"][ref.substr(prefix.size())], root,
                        inst, why);
  }

  if (schema.contains("oneOf")) {
    int hits = 0;
    for (const json& sub : schema["oneOf"]) {
      std::string ignored;
      if (schema_valid(sub, root, inst, &ignored)) ++hits;
    }
    if (hits != 1)
      return fail("oneOf matched " + std::to_string(hits) + " branches");
    return true;
  }

  if (schema.contains("type")) {
    std::string t = schema["type"].get<std::string>();
    bool ok = (t == "object" && inst.is_object()) ||
              (t == "array" && inst.is_array()) ||
              (t == "string" && inst.is_string()) ||
              (t == "boolean" && inst.is_boolean()) ||
              (t == "number" && inst.is_number()) ||
              (t == "integer" &&
               (inst.is_number_integer() || inst.is_number_unsigned()));
    if (!ok) return fail("type mismatch: want " + t);
  }

  if (schema.contains("enum")) {
    bool hit = false;
    for (const json& v : schema["enum"]) hit = hit || (v == inst);
    if (!hit) return fail("enum mismatch: " + inst.dump());
  }

  if (schema.contains("minimum") && inst.is_number() &&
      inst.get<double>() < schema["minimum"].get<double>())
    return fail("below minimum: " + inst.dump());
  if (schema.contains("exclusiveMinimum") && inst.is_number() &&
      inst.get<double>() <= schema["exclusiveMinimum"].get<double>())
    return fail("at or below exclusiveMinimum: " + inst.dump());

  if (inst.is_object()) {
    if (schema.contains("required"))
      for (const json& key : schema["required"])
        if (!inst.contains(key.get<std::string>()))
          return fail("missing required key " + key.get<std::string>());
    const json props =
        schema.contains("properties") ? schema["properties"] : json::object();
    if (schema.contains("additionalProperties") &&
        schema["additionalProperties"] == false)
      for (auto it = inst.begin(); it != inst.end(); ++it)
        if (!props.contains(it.key()))
          return fail("unexpected key " + it.key());
    for (auto it = props.begin(); it != props.end(); ++it)
      if (inst.contains(it.key()) &&
          !schema_valid(it.value(), root, inst[it.key()], why))
        return false;
  }

  if (inst.is_array()) {
    if (schema.contains("minItems") &&
        inst.size() < schema["minItems"].get<std::size_t>())
      return fail("too few items");
    if (schema.contains("maxItems") &&
        inst.size() > schema["maxItems"].get<std::size_t>())
      return fail("too many items");
    if (schema.contains("items"))
      for (const json& el : inst)
        if (!schema_valid(schema["items"], root, el, why)) return false;
  }

  return true;
}

json load_schema() {
  std::string text = fbtest::read_file(FB_SCHEMA_PATH);
  REQUIRE(!text.empty());
  return json::parse(text);
}

void check_against_schema(const std::string& doc) {
  json schema = load_schema();
  json inst = json::parse(doc);
  std::string why;
  INFO("schema violation: ", why);
  CHECK(schema_valid(schema, schema, inst, &why));
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("normconst: flat density in every format") {
  auto res = run_cli("normconst --dim 2 --x 0,0,0 --y 0,0,0");
  REQUIRE(res.exit_code == 0);
  json doc = json::parse(res.out);
  CHECK(std::abs(doc["value"].get<double>() - 4.0 * std::numbers::pi) <
        1e-12);
  CHECK(doc["sd"].get<double>() == 0.0);
  CHECK(doc["route"].get<std::string>() == "series");
  check_against_schema(res.out);

  auto csv = run_cli(
      "normconst --dim 2 --x 0,0,0 --y 0,0,0 --format csv --header");
  REQUIRE(csv.exit_code == 0);
  auto rows = lines_of(csv.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("value,", 0) == 0);

  auto text = run_cli("normconst --dim 2 --x 0,0,0 --y 0,0,0 --format text");
  REQUIRE(text.exit_code == 0);
  CHECK(text.out.find("value = ") != std::string::npos);
}

TEST_CASE("normconst: matrix file input and off-diagonal coupling") {
  std::string path = fbtest::temp_path("qf.txt");
  fbtest::write_file(path, "0,1\n1,0\n");
  auto res = run_cli("normconst --dim 1 --x " + path + " --y 0,0");
  REQUIRE(res.exit_code == 0);
  double from_matrix = json::parse(res.out)["value"].get<double>();

  // same model rotated to diagonal coefficients (-1, 1)
  auto diag = run_cli("normconst --dim 1 --x -1,1 --y 0,0");
  REQUIRE(diag.exit_code == 0);
  double from_diag = json::parse(diag.out)["value"].get<double>();
  CHECK(std::abs(from_matrix - from_diag) < 1e-10 * from_diag);
  std::remove(path.c_str());
}

TEST_CASE("normconst: ensemble output is byte-identical across runs") {
  std::string args =
      "normconst --dim 3 --x 1.2,2.5,3.2,3.6 --y 2.3,5.3,4.2,0.1 "
      "--eps 0.2 --replicas 50 --seed 11";
  auto a = run_cli(args, false);
  auto b = run_cli(args, false);
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);

  json doc = json::parse(a.out);
  CHECK(doc["sd"].get<double>() > 0.0);
  CHECK(doc["route"].get<std::string>() == "hgm");
  CHECK(doc["ci"][0].get<double>() < doc["ci"][1].get<double>());
  check_against_schema(a.out);
}

TEST_CASE("sample then fit round trip") {
  std::string data = fbtest::temp_path("pts.csv");
  auto s = run_cli("sample --dim 2 --x 0.8,0,-0.4 --y 0,0,0.6 --n 150 "
                   "--seed 5 --out " + data);
  REQUIRE(s.exit_code == 0);

  auto s2 = run_cli("sample --dim 2 --x 0.8,0,-0.4 --y 0,0,0.6 --n 150 "
                    "--seed 5 --format csv");
  REQUIRE(s2.exit_code == 0);
  CHECK(fbtest::read_file(data) == s2.out);

  auto rows = lines_of(s2.out);
  REQUIRE(rows.size() == 150);
  for (const std::string& row : rows)
    CHECK(std::count(row.begin(), row.end(), ',') == 2);

  auto fit = run_cli("mle --data " + data + " --dim 2 --starts 2 --seed 3");
  REQUIRE(fit.exit_code == 0);
  json doc = json::parse(fit.out);
  CHECK(doc["status"].get<std::string>() == "Converged");
  CHECK(doc["x"].size() == 6);
  CHECK(doc["y"].size() == 3);
  CHECK(doc["x"][5].get<double>() == 0.0);
  check_against_schema(fit.out);
  std::remove(data.c_str());
}

TEST_CASE("mle rejects off-sphere rows with the row number") {
  std::string data = fbtest::temp_path("bad.csv");
  fbtest::write_file(data, "1,0,0\n0.9,0.1,0\n0,1,0\n");
  auto res = run_cli("mle --data " + data);
  CHECK(res.exit_code == 1);
  CHECK(res.out.find("row 2") != std::string::npos);
  std::remove(data.c_str());
}

TEST_CASE("check subcommand emits a schema-conforming report") {
  auto res = run_cli("check --dims 1 --n 100000 --format json --seed 2");
  REQUIRE(res.exit_code == 0);
  json doc = json::parse(res.out);
  REQUIRE(doc.is_array());
  bool golden_seen = false;
  for (const json& item : doc) {
    CHECK(item["pass"].get<bool>());
    if (item["name"].get<std::string>() == "golden-d1-builders")
      golden_seen = true;
  }
  CHECK(golden_seen);
  check_against_schema(res.out);

  auto text = run_cli("check --dims 1 --n 100000 --seed 2 --format text");
  REQUIRE(text.exit_code == 0);
  CHECK(text.out.find("PASS golden-d1-builders") != std::string::npos);
}

TEST_CASE("config file supplies defaults and flags override it") {
  std::string cfg = fbtest::temp_path("cfg.json");
  fbtest::write_file(cfg, R"({"eps": 0.1, "replicas": 40, "seed": 9})");
  auto res = run_cli("--config " + cfg +
                     " normconst --dim 2 --x 1.4,0,0 --y 1.1,0,0");
  REQUIRE(res.exit_code == 0);
  json doc = json::parse(res.out);
  CHECK(doc["sd"].get<double>() > 0.0);

  // flag wins over the file value
  auto off = run_cli("--config " + cfg +
                     " normconst --dim 2 --x 1.4,0,0 --y 1.1,0,0 --eps 0");
  REQUIRE(off.exit_code == 0);
  CHECK(json::parse(off.out)["sd"].get<double>() == 0.0);

  fbtest::write_file(cfg, R"({"epss": 0.1})");
  auto bad = run_cli("--config " + cfg +
                     " normconst --dim 2 --x 0,0,0 --y 0,0,0");
  CHECK(bad.exit_code == 1);
  CHECK(bad.out.find("epss") != std::string::npos);
  std::remove(cfg.c_str());
}

TEST_CASE("usage errors exit with status 1") {
  CHECK(run_cli("normconst --dim 2 --x 0,0,0").exit_code == 1);
  CHECK(run_cli("normconst --dim 2 --x 0,0 --y 0,0,0").exit_code == 1);
  CHECK(run_cli("nonsense").exit_code == 1);
  CHECK(run_cli("normconst --dim 2 --x 0,0,0 --y 0,0,0 --format yaml")
            .exit_code == 1);
}

TEST_CASE("diagonal-family sweep reproduces the frozen row") {
  auto res = run_cli("bench-table1 --replicas 20 --seed 4 --header");
  REQUIRE(res.exit_code == 0);
  auto rows = lines_of(res.out);
  REQUIRE(rows.size() == 21);
  CHECK(rows[0] == "x11,value,sd");

  // row x11 = 2
  std::istringstream row(rows[4]);
  std::string x11, value, sd;
  std::getline(row, x11, ',');
  std::getline(row, value, ',');
  std::getline(row, sd, ',');
  CHECK(x11 == "2");
  CHECK(std::abs(std::stod(value) - 39075.8) < 1e-3 * 39075.8);
  CHECK(std::stod(sd) > 0.0);
  CHECK(std::stod(sd) < 1e-4 * std::stod(value));
}
