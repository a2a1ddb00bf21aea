/*
 * Copyright 2026 The fedbm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedbm/fed/client.hpp"
#include "fedbm/fed/config.hpp"
#include "fedbm/fed/protocol.hpp"
#include "fedbm/fed/server.hpp"
#include "fedbm/model_io.hpp"
#include "oracle.hpp"

using namespace fedbm;
using namespace fedbm::fed;
namespace fs = std::filesystem;

namespace {

// Throwaway site fixture: a data directory with one table plus a running
// server.
struct TestSite {
  fs::path dir;
  std::unique_ptr<SiteServer> server;

  TestSite(const std::string& name, const BinaryDataset& table,
           bool allow_export = false, int min_rows = 10) {
    dir = fs::temp_directory_path() /
          ("fedbm-test-" + name + "-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    save_dataset_csv(table, (dir / "D.csv").string());
    SiteConfig cfg;
    cfg.host = "127.0.0.1";
    cfg.port = 0;
    cfg.data_directory = dir.string();
    cfg.allow_model_export = allow_export;
    cfg.min_rows_for_training = min_rows;
    cfg.credentials = {{"user", "secret"}};
    server = std::make_unique<SiteServer>(cfg);
    server->start();
  }

  ~TestSite() {
    server->stop();
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  LoginRecord record(const std::string& label) const {
    return {label, "127.0.0.1:" + std::to_string(server->port()), "user",
            "secret", "D"};
  }
};

BinaryDataset random_table(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  return BinaryDataset(rng.sample_bernoulli(Matrix::Constant(rows, cols, 0.4)));
}

}  // namespace

TEST_CASE("site config files parse") {
  std::istringstream in(
      "# test site\n"
      "address = 127.0.0.1:9000\n"
      "data_dir = /tmp/x\n"
      "allow_model_export = true\n"
      "min_rows_for_training = 5\n"
      "users = alice:tok1, bob:tok2\n");
  SiteConfig cfg = parse_site_config(in);
  REQUIRE(cfg.host == "127.0.0.1");
  REQUIRE(cfg.port == 9000);
  REQUIRE(cfg.allow_model_export);
  REQUIRE(cfg.min_rows_for_training == 5);
  REQUIRE(cfg.credentials.size() == 2);
  REQUIRE(cfg.credentials[1] == std::pair<std::string, std::string>{"bob", "tok2"});

  std::istringstream bad("nonsense = 1\n");
  REQUIRE_THROWS_AS(parse_site_config(bad), std::invalid_argument);
}

TEST_CASE("logins CSV parses and enforces unique labels") {
  std::istringstream in(
      "server,url,user,password,table\n"
      "siteA,127.0.0.1:9001,u,p,D\n"
      "siteB,127.0.0.1:9002,u,p,D\n");
  const auto records = parse_logins_csv(in);
  REQUIRE(records.size() == 2);
  REQUIRE(records[0].server == "siteA");
  REQUIRE(records[1].url == "127.0.0.1:9002");

  std::istringstream dup(
      "siteA,127.0.0.1:9001,u,p,D\nsiteA,127.0.0.1:9002,u,p,D\n");
  REQUIRE_THROWS_AS(parse_logins_csv(dup), std::invalid_argument);
}

TEST_CASE("request and response envelopes round-trip") {
  Request r;
  r.session = "abc";
  r.op = "fitdbm";
  r.args = json{{"data", "D"}, {"epochs", 3}};
  const Request back = parse_request(encode_request(r));
  REQUIRE(back.session == "abc");
  REQUIRE(back.op == "fitdbm");
  REQUIRE(back.args["epochs"] == 3);

  REQUIRE_THROWS_AS(parse_request("not json"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_request("{\"args\":{}}"), std::invalid_argument);

  Response ok = Response::success(scalar_payload(1.25));
  Response ok_back = parse_response(encode_response(ok));
  REQUIRE(ok_back.ok);
  REQUIRE(ok_back.payload["value"] == 1.25);

  Response err = Response::error(errors::kDisclosureGuard, "too few rows");
  Response err_back = parse_response(encode_response(err));
  REQUIRE(!err_back.ok);
  REQUIRE(err_back.error_kind == "disclosure_guard");
}

TEST_CASE("login authenticates, assigns, and logs out atomically") {
  TestSite site_a("loginA", random_table(40, 6, 1));
  TestSite site_b("loginB", random_table(40, 6, 2));

  SECTION("bad token is rejected without side effects") {
    LoginRecord bad = site_a.record("siteA");
    bad.password = "wrong";
    REQUIRE_THROWS_MATCHES(
        MultiSiteHandle::login({bad}, true), RemoteError,
        Catch::Matchers::Predicate<RemoteError>(
            [](const RemoteError& e) { return e.kind() == "unauthorized"; }));
  }

  SECTION("missing table fails the whole login") {
    LoginRecord ok = site_a.record("siteA");
    LoginRecord missing = site_b.record("siteB");
    missing.table = "NoSuchTable";
    try {
      MultiSiteHandle::login({ok, missing}, true);
      FAIL("login should have thrown");
    } catch (const RemoteError& e) {
      REQUIRE(e.site() == "siteB");
      REQUIRE(e.kind() == "not_found");
    }
    // The first site is still usable afterwards.
    MultiSiteHandle handle = MultiSiteHandle::login({ok}, true);
    handle.logout();
  }

  SECTION("logout invalidates the session token") {
    MultiSiteHandle handle =
        MultiSiteHandle::login({site_a.record("siteA")}, true);
    const std::string url = site_a.record("siteA").url;
    const std::string token = handle.site("siteA").session_token();
    handle.logout();
    SiteChannel channel("siteA", url, 10.0);
    channel.set_session_token(token);
    Response r = channel.call("set_seed", json{{"seed", 1}});
    REQUIRE(!r.ok);
    REQUIRE(r.error_kind == "unauthorized");
  }

  SECTION("sessions survive reconnects until logout") {
    MultiSiteHandle handle =
        MultiSiteHandle::login({site_a.record("siteA")}, true);
    const std::string token = handle.site("siteA").session_token();
    SiteChannel fresh("siteA", site_a.record("siteA").url, 10.0);
    fresh.set_session_token(token);
    const json payload = fresh.call_ok("splitdata", json{{"data", "D"},
                                                         {"ratio", 0.25},
                                                         {"part1", "D.Train"},
                                                         {"part2", "D.Test"}});
    REQUIRE(payload["rows"][0] == 30);
    REQUIRE(payload["rows"][1] == 10);
    handle.logout();
  }
}

TEST_CASE("whitelist rejects anything that could move raw data") {
  TestSite site("whitelist", random_table(30, 5, 3));
  MultiSiteHandle handle = MultiSiteHandle::login({site.record("siteA")}, true);
  for (const std::string op :
       {"get_data", "fetch_rows", "read_table", "eval", "download"}) {
    Response r = handle.site("siteA").call(op, json{{"data", "D"}});
    REQUIRE(!r.ok);
    REQUIRE(r.error_kind == "forbidden_operation");
  }
  handle.logout();
}

TEST_CASE("training, evaluation, and sampling work over the wire") {
  TestSite site("train", random_table(40, 6, 4));
  MultiSiteHandle handle = MultiSiteHandle::login({site.record("siteA")}, true);
  SiteChannel& channel = handle.site("siteA");

  channel.call_ok("set_seed", json{{"seed", 7}});
  const json fit = channel.call_ok(
      "fitrbm", json{{"data", "D"},
                     {"model", "M"},
                     {"nhidden", 4},
                     {"epochs", 3},
                     {"learningrate", 0.05},
                     {"monitoringdata", json::array({"D"})}});
  REQUIRE(fit["entries"].size() == 3);
  REQUIRE(fit["model"] == "M");
  REQUIRE(fit["overwrote"] == false);

  const json again = channel.call_ok(
      "fitrbm",
      json{{"data", "D"}, {"model", "M"}, {"nhidden", 4}, {"epochs", 1}});
  REQUIRE(again["overwrote"] == true);

  const json recon = channel.call_ok(
      "reconstruction_error", json{{"model", "M"}, {"data", "D"}});
  REQUIRE(recon["value"].get<double>() >= 0.0);
  REQUIRE(recon["value"].get<double>() <= 1.0);

  const json exact = channel.call_ok(
      "exact_loglikelihood", json{{"model", "M"}, {"data", "D"}});
  REQUIRE(exact["value"].get<double>() < 0.0);

  const json ais = channel.call_ok(
      "rbm_loglikelihood", json{{"model", "M"},
                                {"data", "D"},
                                {"ntemperatures", 30},
                                {"nparticles", 20}});
  REQUIRE_THAT(ais["value"].get<double>(),
               Catch::Matchers::WithinAbs(exact["value"].get<double>(), 1.0));

  const json rows = channel.call_ok(
      "samples", json{{"model", "M"},
                      {"n", 25},
                      {"burnin", 30},
                      {"conditioned_on",
                       json{{"indices", json::array({2})},
                            {"values", json::array({1})}}}});
  const BinaryDataset generated = dataset_from_rows_payload(rows);
  REQUIRE(generated.rows() == 25);
  REQUIRE(generated.cols() == 6);
  REQUIRE(generated.values.col(2).isOnes());

  handle.logout();
}

TEST_CASE("a full remote DBM session: split, fit, evaluate, project") {
  TestSite site("dbmflow", random_table(60, 8, 5));
  MultiSiteHandle handle = MultiSiteHandle::login({site.record("siteA")}, true);
  SiteChannel& channel = handle.site("siteA");
  channel.call_ok("set_seed", json{{"seed", 1}});
  channel.call_ok("splitdata", json{{"data", "D"},
                                    {"ratio", 0.2},
                                    {"part1", "D.Train"},
                                    {"part2", "D.Test"}});
  const json fit = channel.call_ok(
      "fitdbm", json{{"data", "D.Train"},
                     {"nhiddens", json::array({5, 3})},
                     {"epochs", 3},
                     {"learningrate", 0.05},
                     {"epochspretraining", 2},
                     {"learningratepretraining", 0.05},
                     {"monitoringdata", json::array({"D.Train", "D.Test"})}});
  // 2 pretraining epochs x 2 layers x 2 datasets + 3 fine-tuning x 2 datasets
  REQUIRE(fit["entries"].size() == 14);
  const MonitoringLog log = monitoring_from_payload(fit);
  REQUIRE(log.entries.size() == 14);

  const json bound = channel.call_ok(
      "logproblowerbound", json{{"model", "dbm"},
                                {"data", "D.Test"},
                                {"ntemperatures", 20},
                                {"nparticles", 10}});
  REQUIRE(bound["value"].get<double>() < 0.0);

  const json latent = channel.call_ok(
      "top2latentdims", json{{"model", "dbm"}, {"data", "D.Test"}});
  REQUIRE(latent["columns"] == json::array({"dim1", "dim2"}));
  REQUIRE(latent["rows"].size() == 12);

  handle.logout();
}

TEST_CASE("defined layers drive partitioned training remotely") {
  TestSite site("layers", random_table(40, 10, 6));
  MultiSiteHandle handle = MultiSiteHandle::login({site.record("siteA")}, true);
  SiteChannel& channel = handle.site("siteA");
  channel.call_ok("set_seed", json{{"seed", 3}});
  channel.call_ok("define_layer", json{{"label", "L1a"},
                                       {"n_hidden", 3},
                                       {"n_input", 5}});
  channel.call_ok("define_layer", json{{"label", "L1b"},
                                       {"n_hidden", 2},
                                       {"n_input", 5}});
  channel.call_ok("define_partitioned_layer",
                  json{{"label", "L1"}, {"parts", json::array({"L1a", "L1b"})}});
  channel.call_ok("stackrbms", json{{"data", "D"},
                                    {"model", "S"},
                                    {"nhiddens", json::array({"L1", 3})},
                                    {"epochs", 2},
                                    {"for_dbm", false}});
  // The stack exists server-side; sampling it is rejected.
  Response r = channel.call("samples", json{{"model", "S"}, {"n", 5}});
  REQUIRE(!r.ok);
  REQUIRE(r.error_kind == "bad_request");
  handle.logout();
}

TEST_CASE("model export is gated by site policy") {
  SECTION("default configuration refuses export") {
    TestSite site("noexport", random_table(30, 5, 7));
    MultiSiteHandle handle =
        MultiSiteHandle::login({site.record("siteA")}, true);
    SiteChannel& channel = handle.site("siteA");
    channel.call_ok("set_seed", json{{"seed", 1}});
    channel.call_ok("fitrbm",
                    json{{"data", "D"}, {"nhidden", 3}, {"epochs", 1}});
    Response r = channel.call("export_model", json{{"model", "rbm"}});
    REQUIRE(!r.ok);
    REQUIRE(r.error_kind == "export_disabled");
    handle.logout();
  }

  SECTION("opt-in export returns a loadable container") {
    TestSite site("export", random_table(30, 5, 8), /*allow_export=*/true);
    MultiSiteHandle handle =
        MultiSiteHandle::login({site.record("siteA")}, true);
    SiteChannel& channel = handle.site("siteA");
    channel.call_ok("set_seed", json{{"seed", 1}});
    channel.call_ok("fitrbm",
                    json{{"data", "D"}, {"nhidden", 3}, {"epochs", 1}});
    const json payload = channel.call_ok("export_model", json{{"model", "rbm"}});
    REQUIRE(payload["format"] == "fedbm-model");
    const AnyModel model = model_from_string(payload["text"].get<std::string>());
    REQUIRE(std::holds_alternative<Rbm>(model));
    handle.logout();
  }
}

TEST_CASE("the disclosure guard refuses undersized sites") {
  TestSite site("guard", random_table(9, 5, 9));
  MultiSiteHandle handle = MultiSiteHandle::login({site.record("siteA")}, true);
  SiteChannel& channel = handle.site("siteA");
  Response r = channel.call("fitdbm", json{{"data", "D"},
                                           {"nhiddens", json::array({3, 2})},
                                           {"epochs", 1}});
  REQUIRE(!r.ok);
  REQUIRE(r.error_kind == "disclosure_guard");

  Response r2 = channel.call("fitrbm", json{{"data", "D"}, {"nhidden", 3}});
  REQUIRE(!r2.ok);
  REQUIRE(r2.error_kind == "disclosure_guard");
  handle.logout();
}

TEST_CASE("25-row sites pass the default guard") {
  TestSite site("guard25", random_table(25, 5, 10));
  MultiSiteHandle handle = MultiSiteHandle::login({site.record("siteA")}, true);
  SiteChannel& channel = handle.site("siteA");
  channel.call_ok("set_seed", json{{"seed", 1}});
  const json fit = channel.call_ok(
      "fitrbm", json{{"data", "D"}, {"nhidden", 3}, {"epochs", 1}});
  REQUIRE(fit["model"] == "rbm");
  handle.logout();
}

TEST_CASE("two sites pool deterministically under fixed seeds") {
  TestSite site_a("poolA", random_table(30, 6, 11));
  TestSite site_b("poolB", random_table(30, 6, 12));

  auto run_once = [&]() {
    MultiSiteHandle handle = MultiSiteHandle::login(
        {site_a.record("siteA"), site_b.record("siteB")}, true);
    Index i = 0;
    for (const std::string& label : handle.labels()) {
      handle.site(label).call_ok("set_seed", json{{"seed", 100 + i}});
      ++i;
    }
    handle.call_all("fitdbm", json{{"data", "D"},
                                   {"nhiddens", json::array({4, 2})},
                                   {"epochs", 2},
                                   {"epochspretraining", 2}});
    std::map<std::string, BinaryDataset> parts;
    for (const auto& [label, payload] :
         handle.call_all("samples", json{{"model", "dbm"}, {"n", 15}})) {
      parts.emplace(label, dataset_from_rows_payload(payload));
    }
    handle.logout();
    return pool_samples(parts);
  };

  const BinaryDataset first = run_once();
  REQUIRE(first.rows() == 30);
  const BinaryDataset second = run_once();
  REQUIRE(first.values == second.values);
}

TEST_CASE("pool_samples concatenates in label order and checks columns") {
  Rng rng(13);
  BinaryDataset a(rng.sample_bernoulli(Matrix::Constant(2, 3, 0.5)));
  BinaryDataset b(rng.sample_bernoulli(Matrix::Constant(3, 3, 0.5)));
  std::map<std::string, BinaryDataset> parts{{"site002", b}, {"site001", a}};
  const BinaryDataset pooled = pool_samples(parts);
  REQUIRE(pooled.rows() == 5);
  REQUIRE(pooled.values.topRows(2) == a.values);
  REQUIRE(pooled.values.bottomRows(3) == b.values);

  BinaryDataset wide(rng.sample_bernoulli(Matrix::Constant(2, 4, 0.5)));
  parts.emplace("site003", wide);
  REQUIRE_THROWS_AS(pool_samples(parts), std::invalid_argument);

  std::map<std::string, BinaryDataset> single{{"siteX", a}};
  REQUIRE(pool_samples(single).values == a.values);
}
