// Copyright 2026 The termforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "test_support.hpp"

namespace termforge {
namespace {

using testing::fixture;
using testing::store_at;
using testing::TempDir;
using testing::write_file;

const std::string kV3Header = "read_code\tterm\tterm_30\tterm_60\tterm_198\tterm_id\tsynonym\tstatus\n";

std::size_t data_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n == 0 ? 0 : n - 1;
}

template <typename Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::StoreError;
}

ParsedSource parse_dir(const DictionaryAdapter& a, const std::filesystem::path& dir, bool lenient = false) {
  return parse_source(a, make_bundle(a, dir), ParseOptions{lenient});
}

TEST(ParseSource, CopdFixture) {
  const auto dir = fixture("readv3-copd-sample");
  auto parsed = parse_dir(readv3_adapter(), dir);
  // oracle: raw line counts of the fixture files
  EXPECT_EQ(parsed.records.size(), data_lines(dir / "concepts.tsv"));
  EXPECT_EQ(parsed.links.size(), data_lines(dir / "parents.tsv"));
  EXPECT_GE(parsed.records.size(), 24u);
  EXPECT_GE(parsed.links.size(), 22u);
  std::size_t preferred = 0, synonyms = 0;
  for (const auto& r : parsed.records) {
    if (r.code != "H3...") continue;
    (r.synonym ? synonyms : preferred)++;
  }
  EXPECT_EQ(preferred, 1u);
  EXPECT_EQ(synonyms, 16u);
}

TEST(ParseSource, CodeWidth) {
  TempDir dir;
  write_file(dir / "concepts.tsv", "read_code\tterm\nH3...\tCOPD\nH3....\tToo wide\n");
  try {
    parse_dir(readv2_adapter(), dir.path());
    FAIL();
  } catch (const RowError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CodeWidthError);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseSource, DanglingParent) {
  TempDir dir;
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOPD\t\t\t\tT1\t0\tC\nH3122\tAcute COPD\t\t\t\tT2\t0\tC\n");
  write_file(dir / "parents.tsv", "code\tparent_code\nH3122\tH3...\nH3122\tZZZZZ\n");
  try {
    parse_dir(readv3_adapter(), dir.path());
    FAIL();
  } catch (const RowError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DanglingParent);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseSource, HeaderMustMatchSchema) {
  TempDir dir;
  write_file(dir / "concepts.tsv", "read_code\tdescription\nH3...\tCOPD\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv2_adapter(), dir.path()); }), ErrorKind::MissingColumn);
  write_file(dir / "concepts.tsv", "read_code\nH3...\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv2_adapter(), dir.path()); }), ErrorKind::MissingColumn);
  write_file(dir / "concepts.tsv", "read_code\tterm\textra\nH3...\tCOPD\tx\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv2_adapter(), dir.path()); }), ErrorKind::MalformedRow);
}

TEST(ParseSource, MalformedRows) {
  TempDir dir;
  const std::vector<std::string> bad_bodies{
      "H3...\tCOPD\textra\n",           // field count
      "H3...\n",                        // field count
      "H3...\tCOPD\r\n",                // CRLF
      "H3...\t\xff\xfe\n",              // not UTF-8
      "H3...\t\n",                      // empty term
  };
  for (const auto& body : bad_bodies) {
    write_file(dir / "concepts.tsv", "read_code\tterm\n" + body);
    EXPECT_EQ(kind_of([&] { parse_dir(readv2_adapter(), dir.path()); }), ErrorKind::MalformedRow) << body;
  }
}

TEST(ParseSource, StatusAndSynonymAreValidated) {
  TempDir dir;
  write_file(dir / "parents.tsv", "code\tparent_code\n");
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOPD\t\t\t\tT1\t0\tX\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv3_adapter(), dir.path()); }), ErrorKind::MalformedRow);
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOPD\t\t\t\tT1\t2\tC\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv3_adapter(), dir.path()); }), ErrorKind::MalformedRow);
}

TEST(ParseSource, DuplicateTermIdIsAnError) {
  TempDir dir;
  write_file(dir / "parents.tsv", "code\tparent_code\n");
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOPD\t\t\t\tT1\t0\tC\nH3...\tCOLD\t\t\t\tT1\t1\tC\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv3_adapter(), dir.path()); }), ErrorKind::DuplicateRecord);
}

TEST(ParseSource, DuplicateCodeTermWithoutTermId) {
  TempDir dir;
  write_file(dir / "concepts.tsv", "read_code\tterm\nH3...\tCOPD\nH3...\tCOPD\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv2_adapter(), dir.path()); }), ErrorKind::DuplicateRecord);
  write_file(dir / "concepts.tsv", "read_code\tterm\nH3...\tCOPD\nH3...\tCOLD\n");
  EXPECT_EQ(parse_dir(readv2_adapter(), dir.path()).records.size(), 2u);
}

TEST(ParseSource, ExactlyOnePreferredTermPerCode) {
  TempDir dir;
  write_file(dir / "parents.tsv", "code\tparent_code\n");
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOPD\t\t\t\tT1\t0\tC\nH3...\tCOLD\t\t\t\tT2\t0\tC\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv3_adapter(), dir.path()); }), ErrorKind::PreferredTermError);
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOLD\t\t\t\tT2\t1\tC\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv3_adapter(), dir.path()); }), ErrorKind::PreferredTermError);
}

TEST(ParseSource, SelfLoopIsACycle) {
  TempDir dir;
  write_file(dir / "concepts.tsv", kV3Header + "H3...\tCOPD\t\t\t\tT1\t0\tC\n");
  write_file(dir / "parents.tsv", "code\tparent_code\nH3...\tH3...\n");
  EXPECT_EQ(kind_of([&] { parse_dir(readv3_adapter(), dir.path()); }), ErrorKind::CycleDetected);
}

TEST(ParseSource, LenientCollectsRejects) {
  TempDir dir;
  write_file(dir / "concepts.tsv", "read_code\tterm\nH3...\tCOPD\nH3....\tbad\nH31..\tChronic bronchitis\nH4\tshort\n");
  auto parsed = parse_dir(readv2_adapter(), dir.path(), true);
  EXPECT_EQ(parsed.records.size(), 2u);
  ASSERT_EQ(parsed.rejects.size(), 2u);
  EXPECT_EQ(parsed.rejects[0].line, 3u);
  EXPECT_EQ(parsed.rejects[1].kind, ErrorKind::CodeWidthError);
  EXPECT_EQ(parsed.concept_rows - parsed.rejects.size(), parsed.records.size());
}

TEST(ParseSource, BundleMustMatchStrategy) {
  SourceBundle b{fixture("readv2-sample"), fixture("readv2-sample") / "concepts.tsv",
                 fixture("readv3-copd-sample") / "parents.tsv"};
  EXPECT_EQ(kind_of([&] { parse_source(readv2_adapter(), b); }), ErrorKind::InvalidBundle);
  b.parents_file.reset();
  EXPECT_EQ(kind_of([&] { parse_source(readv3_adapter(), b); }), ErrorKind::InvalidBundle);
  EXPECT_EQ(kind_of([&] { make_bundle(readv3_adapter(), fixture("readv2-sample")); }), ErrorKind::NotFound);
  EXPECT_EQ(kind_of([&] { make_bundle(readv2_adapter(), fixture("no-such-dir")); }), ErrorKind::NotFound);
}

TEST(Icd10, ComposeTerm) {
  EXPECT_EQ(compose_icd10_term("Asthma", std::nullopt, std::nullopt, "J45"), "Asthma");
  EXPECT_EQ(compose_icd10_term("Asthma", std::string("predominantly allergic"), std::nullopt, "J450"),
            "Asthma predominantly allergic");
  EXPECT_EQ(compose_icd10_term("Fracture", std::string("closed"), std::string("with delayed healing"), "S5250"),
            "Fracture closed with delayed healing");
  // modifiers only count once the code reaches that character
  EXPECT_EQ(compose_icd10_term("Asthma", std::string("predominantly allergic"), std::nullopt, "J45"), "Asthma");
  EXPECT_EQ(compose_icd10_term("Fracture", std::nullopt, std::string("with delayed healing"), "S5250"),
            "Fracture with delayed healing");
}

TEST(Icd10, FixtureTermsFollowCompositionRule) {
  const auto dir = fixture("icd10-sample");
  auto parsed = parse_dir(icd10_adapter(), dir);
  // oracle: recompose from the raw cells of the file
  std::ifstream in(dir / "concepts.tsv");
  std::string line;
  std::getline(in, line);
  std::map<std::string, std::string> expected;
  while (std::getline(in, line)) {
    auto cells = text::split(line, '\t');
    std::string term(cells[2]);
    if (cells[0].size() >= 4 && !cells[3].empty()) term += " " + std::string(cells[3]);
    if (cells[0].size() >= 5 && !cells[4].empty()) term += " " + std::string(cells[4]);
    expected[std::string(cells[0])] = term;
  }
  ASSERT_EQ(parsed.records.size(), 3u);
  for (const auto& r : parsed.records) EXPECT_EQ(r.term, expected.at(r.code));
  EXPECT_EQ(expected.at("J450"), "Asthma predominantly allergic");
  EXPECT_EQ(expected.at("S5250"), "Fracture closed with delayed healing");
}

TEST(Icd10, ProvidedTermMustAgree) {
  TempDir dir;
  write_file(dir / "concepts.tsv",
             "icd10_code\tterm\tdescription\tmodifier_4\tmodifier_5\ttree_description\n"
             "J450\tAsthma allergic\tAsthma\tpredominantly allergic\t\t\n");
  EXPECT_EQ(kind_of([&] { parse_dir(icd10_adapter(), dir.path()); }), ErrorKind::MalformedRow);
}

// ---------------------------------------------------------------------------

TEST(Build, CopdFixtureReport) {
  TempDir dir;
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  auto report = build_concept_tables(h, readv3_adapter(), fixture("readv3-copd-sample"));
  EXPECT_EQ(report.concepts, data_lines(fixture("readv3-copd-sample") / "concepts.tsv"));
  EXPECT_EQ(report.links, data_lines(fixture("readv3-copd-sample") / "parents.tsv"));
  EXPECT_GE(report.concepts, 24u);
  EXPECT_GE(report.links, 22u);
  EXPECT_EQ(report.rejected, 0u);
  EXPECT_TRUE(is_built(h, readv3_adapter()));
}

TEST(Build, EmptyConceptsFile) {
  TempDir dir;
  write_file(dir / "src" / "concepts.tsv", "");
  write_file(dir / "src" / "parents.tsv", "");
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  auto report = build_concept_tables(h, readv3_adapter(), dir / "src");
  EXPECT_EQ(report.concepts, 0u);
  EXPECT_EQ(report.links, 0u);
  EXPECT_EQ(report.rejected, 0u);
  EXPECT_TRUE(scan_concepts(h, readv3_adapter()).empty());
}

TEST(Build, HeaderOnlyFileIsEmpty) {
  TempDir dir;
  write_file(dir / "src" / "concepts.tsv", "read_code\tterm\n");
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  EXPECT_EQ(build_concept_tables(h, readv2_adapter(), dir / "src").concepts, 0u);
}

TEST(Build, CycleLeavesStoreUnchanged) {
  TempDir dir;
  testing::write_readv3_source(dir / "src", {"AAAAA", "BBBBB"}, {{"AAAAA", "BBBBB"}, {"BBBBB", "AAAAA"}});
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  EXPECT_EQ(kind_of([&] { build_concept_tables(h, readv3_adapter(), dir / "src"); }), ErrorKind::CycleDetected);
  EXPECT_FALSE(h.table_exists("readv3_concept"));
}

TEST(Build, AlreadyBuiltNeedsOverwrite) {
  TempDir dir;
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  build_concept_tables(h, readv2_adapter(), fixture("readv2-sample"));
  EXPECT_EQ(kind_of([&] { build_concept_tables(h, readv2_adapter(), fixture("readv2-sample")); }),
            ErrorKind::AlreadyBuilt);
  BuildOptions opts;
  opts.overwrite = true;
  EXPECT_EQ(build_concept_tables(h, readv2_adapter(), fixture("readv2-sample"), opts).concepts, 6u);
}

TEST(Build, PopulatesInitializedSchema) {
  TempDir dir;
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  initialize_schema(h, readv2_adapter());
  EXPECT_EQ(build_concept_tables(h, readv2_adapter(), fixture("readv2-sample")).concepts, 6u);
}

TEST(Build, OverwriteIsIdempotent) {
  TempDir dir;
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  build_concept_tables(h, readv3_adapter(), fixture("readv3-copd-sample"));
  auto once = scan_concepts(h, readv3_adapter());
  auto once_links = scan_links(h, readv3_adapter());
  BuildOptions opts;
  opts.overwrite = true;
  build_concept_tables(h, readv3_adapter(), fixture("readv3-copd-sample"), opts);
  EXPECT_EQ(scan_concepts(h, readv3_adapter()), once);
  EXPECT_EQ(scan_links(h, readv3_adapter()), once_links);
}

TEST(Build, FaultAtAnyRowCommitsNothing) {
  const auto source = fixture("readv3-copd-sample");
  const auto total = data_lines(source / "concepts.tsv") + data_lines(source / "parents.tsv");
  for (std::size_t fault = 0; fault < total; fault += 5) {
    TempDir dir;
    auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
    initialize_schema(h, readv3_adapter());
    BuildOptions opts;
    opts.row_hook = [fault](std::size_t row) {
      if (row == fault) throw Error(ErrorKind::InjectedFault, "row " + std::to_string(row));
    };
    EXPECT_EQ(kind_of([&] { build_concept_tables(h, readv3_adapter(), source, opts); }), ErrorKind::InjectedFault);
    EXPECT_TRUE(scan_concepts(h, readv3_adapter()).empty()) << fault;
    EXPECT_TRUE(scan_links(h, readv3_adapter()).empty()) << fault;
    EXPECT_FALSE(is_built(h, readv3_adapter()));
  }
}

TEST(Build, FailedOverwriteKeepsPreviousBuild) {
  TempDir dir;
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  build_concept_tables(h, readv3_adapter(), fixture("readv3-copd-sample"));
  auto before = scan_concepts(h, readv3_adapter());
  BuildOptions opts;
  opts.overwrite = true;
  opts.row_hook = [](std::size_t row) {
    if (row == 30) throw Error(ErrorKind::InjectedFault, "boom");
  };
  EXPECT_THROW(build_concept_tables(h, readv3_adapter(), fixture("readv3-copd-sample"), opts), Error);
  EXPECT_EQ(scan_concepts(h, readv3_adapter()), before);
  EXPECT_TRUE(is_built(h, readv3_adapter()));
}

TEST(Build, LenientConservation) {
  TempDir dir;
  write_file(dir / "src" / "concepts.tsv", "read_code\tterm\nH3...\tCOPD\nH3....\tbad\nH31..\tChronic bronchitis\n");
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  BuildOptions opts;
  opts.lenient = true;
  auto report = build_concept_tables(h, readv2_adapter(), dir / "src", opts);
  EXPECT_EQ(report.rejected, 1u);
  EXPECT_EQ(report.concepts, report.concept_rows - report.rejected);
  EXPECT_EQ(count_concepts(h, readv2_adapter()), report.concepts);
}

TEST(Build, StrictModeRejectsAndLeavesNothing) {
  TempDir dir;
  write_file(dir / "src" / "concepts.tsv", "read_code\tterm\nH3...\tCOPD\nH3....\tbad\n");
  auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
  EXPECT_EQ(kind_of([&] { build_concept_tables(h, readv2_adapter(), dir / "src"); }), ErrorKind::CodeWidthError);
  EXPECT_FALSE(h.table_exists("readv2_concept"));
}

TEST(Build, RandomDagsBuildAndBackEdgesFail) {
  std::mt19937 rng(1234);
  for (int iter = 0; iter < 30; ++iter) {
    auto dag = testing::random_dag(rng, 60, 150);
    TempDir dir;
    testing::write_readv3_source(dir / "ok", dag.codes, dag.links);
    auto h = open_store(store_at(dir / "s.db"), OpenMode::ReadWrite);
    auto report = build_concept_tables(h, readv3_adapter(), dir / "ok");
    EXPECT_EQ(report.links, dag.links.size());
    if (dag.links.empty()) continue;

    // reverse one existing edge on top of the original set
    auto links = dag.links;
    std::uniform_int_distribution<std::size_t> pick(0, links.size() - 1);
    const auto edge = links[pick(rng)];
    links.push_back({edge.parent_code, edge.code});
    testing::write_readv3_source(dir / "bad", dag.codes, links);
    auto h2 = open_store(store_at(dir / "s2.db"), OpenMode::ReadWrite);
    EXPECT_EQ(kind_of([&] { build_concept_tables(h2, readv3_adapter(), dir / "bad"); }), ErrorKind::CycleDetected);
  }
}

TEST(FindCycle, DetectsLongCycle) {
  std::vector<ParentLink> links;
  for (int i = 0; i < 10; ++i) links.push_back({testing::node_code(i), testing::node_code(i + 1)});
  EXPECT_FALSE(find_cycle(links));
  links.push_back({testing::node_code(10), testing::node_code(0)});
  EXPECT_TRUE(find_cycle(links));
}

TEST(Tsv, RowRoundTrip) {
  auto schema = adapter_schema(readv3_adapter());
  auto parsed = parse_dir(readv3_adapter(), fixture("readv3-copd-sample"));
  std::ifstream in(fixture("readv3-copd-sample") / "concepts.tsv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, tsv_header(schema));
  std::string line;
  for (const auto& rec : parsed.records) {
    ASSERT_TRUE(std::getline(in, line));
    EXPECT_EQ(tsv_row(rec, schema), line);
  }
}

}  // namespace
}  // namespace termforge
