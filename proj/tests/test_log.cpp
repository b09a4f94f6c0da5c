#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "facereid/log.hpp"
#include "facereid/sources.hpp"
#include "test_support.hpp"

namespace facereid {
namespace {

std::vector<LogRecord> record_run(const ScenarioScript& script, const EngineParams& p,
                                  bool embed = true) {
  ScenarioSource source(script);
  PrecomputedEmbedder embedder;
  RecordingSink sink({.embed_embeddings = embed});
  run(source, embedder, p, sink, {.deterministic = true});
  return sink.records();
}

std::string to_text(const std::vector<LogRecord>& records) {
  std::ostringstream out;
  write_log(records, out);
  return out.str();
}

ParsedLog from_text(const std::string& text) {
  std::istringstream in(text);
  return read_log(in);
}

std::size_t error_line(const std::string& text) {
  try {
    from_text(text);
  } catch (const LogError& e) {
    return e.line();
  }
  return 0;
}

TEST(LogRoundTrip, WriteThenReadGivesEqualRecords) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto script = testing::noisy_four_person_script(seed, 200);
    EngineParams p;
    p.t_min = 20;
    for (bool embed : {false, true}) {
      const auto records = record_run(script, p, embed);
      const auto parsed = from_text(to_text(records));
      ASSERT_EQ(parsed.records.size(), records.size());
      EXPECT_TRUE(parsed.records == records);
      EXPECT_TRUE(parsed.warnings.empty());
      EXPECT_EQ(to_text(parsed.records), to_text(records));
    }
  }
}

TEST(LogRoundTrip, NonDeterministicHeaderFieldsSurvive) {
  HeaderRecord h;
  h.run_id = "r";
  h.embedding_dim = 512;
  h.provider = "p";
  h.fps = 30.0;
  h.frame_width = 640;
  h.frame_height = 480;
  h.started_at = "2026-01-01T00:00:00Z";
  SummaryRecord s;
  s.wall_ms = 12.5;
  s.truncated = true;
  s.truncation_reason = "gone";
  s.warnings = {"w1"};
  const std::vector<LogRecord> records{h, s};
  EXPECT_TRUE(from_text(to_text(records)).records == records);
}

TEST(LogRoundTrip, LinesAreSelfDescribingJson) {
  const auto text = to_text(record_run(testing::staggered_script(1, 5, 1, 8), EngineParams{
                                                                                .t_min = 0,
                                                                                .embedding_dim = 8,
                                                                            }));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind(R"({"type":"header")", 0), 0u) << line;
  std::string last;
  while (std::getline(in, line)) last = line;
  EXPECT_EQ(last.rfind(R"({"type":"summary")", 0), 0u) << last;
}

// Hand-built fixtures for ordering rules; line numbers are 1-based.
struct Fixture {
  std::vector<std::string> lines;
  Fixture() {
    HeaderRecord h;
    h.run_id = "fixture";
    h.embedding_dim = 512;
    h.provider = "fixture";
    lines.push_back(to_json_line(h));
  }
  Fixture& frame(FrameIndex f) {
    lines.push_back(to_json_line(FrameRecord{f, 1, 0}));
    return *this;
  }
  Fixture& event(IdentityId id, LifecycleEvent e, FrameIndex f) {
    lines.push_back(to_json_line(IdentityEvent{id, e, f}));
    return *this;
  }
  Fixture& obs(FrameIndex f, std::optional<IdentityId> id, Outcome outcome) {
    ObsRecord o;
    o.frame = f;
    o.outcome = outcome;
    o.identity_id = id;
    if (id) o.state = IdentityState::Held;
    o.box = BoundingBox(0, 0, 10, 10);
    o.score = 0.9;
    lines.push_back(to_json_line(o));
    return *this;
  }
  Fixture& raw(std::string s) {
    lines.push_back(std::move(s));
    return *this;
  }
  Fixture& summary() {
    lines.push_back(to_json_line(SummaryRecord{}));
    return *this;
  }
  std::string text() const {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
  }
};

TEST(LogValidation, WellFormedFixtureReads) {
  const auto t = Fixture()
                     .frame(0)
                     .event(0, LifecycleEvent::Enrolled, 0)
                     .obs(0, 0, Outcome::Enrolled)
                     .frame(1)
                     .obs(1, 0, Outcome::Matched)
                     .event(0, LifecycleEvent::Activated, 1)
                     .summary()
                     .text();
  EXPECT_EQ(from_text(t).records.size(), 8u);
}

TEST(LogValidation, ObservationBeforeEnrollment) {
  const auto t = Fixture()
                     .frame(0)
                     .obs(0, 0, Outcome::Enrolled)
                     .event(0, LifecycleEvent::Enrolled, 0)
                     .summary()
                     .text();
  EXPECT_EQ(error_line(t), 3u);
}

TEST(LogValidation, FramesMustIncrease) {
  const auto t = Fixture().frame(3).frame(3).summary().text();
  EXPECT_EQ(error_line(t), 3u);
  EXPECT_EQ(error_line(Fixture().frame(3).frame(1).summary().text()), 3u);
}

TEST(LogValidation, ObservationOutsideItsFrame) {
  EXPECT_EQ(error_line(Fixture().obs(0, std::nullopt, Outcome::RejectedLowScore).summary().text()),
            2u);
  EXPECT_EQ(error_line(
                Fixture().frame(0).frame(1).obs(0, std::nullopt, Outcome::RejectedLowScore).text()),
            4u);
}

TEST(LogValidation, SecondTerminalEventRejected) {
  const auto t = Fixture()
                     .frame(0)
                     .event(0, LifecycleEvent::Enrolled, 0)
                     .event(0, LifecycleEvent::Activated, 0)
                     .frame(1)
                     .event(0, LifecycleEvent::Discarded, 1)
                     .summary()
                     .text();
  EXPECT_EQ(error_line(t), 6u);
}

TEST(LogValidation, EnrollmentIdsMustBeDense) {
  EXPECT_EQ(error_line(Fixture().frame(0).event(1, LifecycleEvent::Enrolled, 0).summary().text()),
            3u);
}

TEST(LogValidation, HeaderFirstAndOnlyOnce) {
  Fixture f;
  const std::string header = f.lines[0];
  f.lines.erase(f.lines.begin());
  f.frame(0).summary();
  EXPECT_EQ(error_line(f.text()), 1u);
  EXPECT_EQ(error_line(Fixture().frame(0).raw(header).summary().text()), 3u);
}

TEST(LogValidation, RecordAfterSummary) {
  EXPECT_EQ(error_line(Fixture().summary().frame(0).text()), 3u);
}

TEST(LogValidation, TruncatedLogNamesTheTruncationPoint) {
  // Missing summary: error points just past the last line.
  EXPECT_EQ(error_line(Fixture().frame(0).frame(1).text()), 4u);
  // Cut mid-record: error at the partial line.
  auto t = Fixture().frame(0).frame(1).summary().text();
  t = t.substr(0, t.size() - 10);
  EXPECT_EQ(error_line(t), 4u);
}

TEST(LogValidation, MalformedJsonAndSchema) {
  EXPECT_EQ(error_line(Fixture().raw("{not json").summary().text()), 2u);
  EXPECT_EQ(error_line(Fixture().raw(R"({"frame":1})").summary().text()), 2u);
  EXPECT_EQ(error_line(Fixture().raw(R"({"type":"frame","frame":"x"})").summary().text()), 2u);
  try {
    from_text(Fixture().raw("{not json").summary().text());
  } catch (const LogError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("log line 2:", 0), 0u) << e.what();
  }
}

TEST(LogValidation, UnknownRecordTypeIsSkippedWithWarning) {
  const auto parsed =
      from_text(Fixture().frame(0).raw(R"({"type":"thumbnail","frame":0})").summary().text());
  EXPECT_EQ(parsed.records.size(), 3u);
  ASSERT_EQ(parsed.warnings.size(), 1u);
  EXPECT_NE(parsed.warnings[0].find("line 3"), std::string::npos);
}

TEST(LogWriter, StreamsTheSameBytesAsRecording) {
  const auto script = testing::staggered_script(3, 150, 12);
  std::ostringstream streamed;
  {
    ScenarioSource source(script);
    PrecomputedEmbedder embedder;
    LogWriter writer(streamed, {.embed_embeddings = true});
    run(source, embedder, EngineParams{}, writer, {.deterministic = true});
  }
  EXPECT_EQ(streamed.str(), to_text(record_run(script, EngineParams{})));
}

TEST(LogWriter, EmbeddingsOnlyWhenRequested) {
  const auto text = to_text(record_run(testing::staggered_script(1, 5, 1), EngineParams{}, false));
  EXPECT_EQ(text.find("\"embedding\""), std::string::npos);
  EXPECT_NE(to_text(record_run(testing::staggered_script(1, 5, 1), EngineParams{}, true))
                .find("\"embedding\""),
            std::string::npos);
}

std::vector<std::string> emission_lines(const std::vector<LogRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) {
    if (std::holds_alternative<ObsRecord>(r) || std::holds_alternative<IdentityEvent>(r) ||
        std::holds_alternative<FrameRecord>(r)) {
      out.push_back(to_json_line(r));
    }
  }
  return out;
}

TEST(Replay, ReproducesTheObservationSequence) {
  auto script = testing::noisy_four_person_script(31, 300);
  EngineParams p;
  p.t_min = 25;
  const auto original = record_run(script, p);
  const auto parsed = from_text(to_text(original));
  ReplaySource replay(parsed);
  PrecomputedEmbedder embedder;
  RecordingSink sink({.embed_embeddings = true});
  run(replay, embedder, p, sink, {.deterministic = true});
  EXPECT_EQ(emission_lines(sink.records()), emission_lines(original));
  EXPECT_TRUE(sink.records() == original);
}

TEST(Replay, KeepsEmptyFramesAndIndexGaps) {
  std::vector<Frame> frames;
  frames.push_back(testing::frame_of(0, {}, {}));
  frames.push_back(testing::frame_of(
      4, {testing::det(0, 0, 10, 10, 0.9, 4)}, {testing::axis(512, 0)}));
  frames.push_back(testing::frame_of(9, {}, {}));
  VectorSource source(frames, "vec");
  PrecomputedEmbedder embedder;
  RecordingSink sink({.embed_embeddings = true});
  run(source, embedder, EngineParams{}, sink, {.deterministic = true});
  ReplaySource replay(from_text(to_text(sink.records())));
  std::vector<FrameIndex> seen;
  while (auto f = replay.next()) seen.push_back(f->index);
  EXPECT_EQ(seen, (std::vector<FrameIndex>{0, 4, 9}));
}

TEST(Replay, RequiresEmbeddings) {
  const auto parsed =
      from_text(to_text(record_run(testing::staggered_script(1, 5, 1), EngineParams{}, false)));
  try {
    ReplaySource replay(parsed);
    FAIL();
  } catch (const LogError& e) {
    EXPECT_NE(std::string(e.what()).find("replay requires embeddings"), std::string::npos);
  }
}

TEST(Replay, TruncatedFileFailsAtTruncationPoint) {
  testing::TempDir dir;
  const auto text = to_text(record_run(testing::staggered_script(1, 5, 1), EngineParams{}));
  const auto cut = text.substr(0, text.rfind("{\"type\":\"summary\""));
  const auto lines = static_cast<std::size_t>(std::count(cut.begin(), cut.end(), '\n'));
  std::ofstream(dir / "cut.jsonl") << cut;
  try {
    ReplaySource replay(dir / "cut.jsonl");
    FAIL();
  } catch (const LogError& e) {
    EXPECT_EQ(e.line(), lines + 1);
  }
}

}  // namespace
}  // namespace facereid
