// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cvaegen/corpus.hpp"

namespace cvaegen {
namespace {

namespace fs = std::filesystem;

Utterance weather_in_paris() {
  return make_utterance({{"Weather in ", std::nullopt}, {"Paris", "City"}}, "GetWeather");
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("cvaegen_corpus_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Tokenize, LowercasesAndDetachesPunctuation) {
  EXPECT_EQ(tokenize("What's the Weather, in Paris?"),
            (std::vector<std::string>{"what's", "the", "weather", ",", "in", "paris", "?"}));
  EXPECT_EQ(tokenize("set it to 3.5 at 10:30"),
            (std::vector<std::string>{"set", "it", "to", "3.5", "at", "10:30"}));
  EXPECT_EQ(tokenize("weather in [City] !"), (std::vector<std::string>{"weather", "in", "[City]", "!"}));
}

TEST(Delexicalize, ReplacesSlotWithPlaceholder) {
  SlotDictionary slots;
  const auto p = delexicalize(weather_in_paris(), slots);
  EXPECT_EQ(p.tokens, (std::vector<std::string>{"weather", "in", "[City]"}));
  EXPECT_EQ(slots.values.at("City"), (std::vector<std::string>{"paris"}));
}

TEST(Delexicalize, TrackAndArtist) {
  const auto u = make_utterance(
      {{"play ", std::nullopt}, {"Skinny Love", "TrackTitle"}, {" by ", std::nullopt}, {"Bon Iver", "Artist"}},
      "PlayMusic");
  EXPECT_EQ(delexicalize(u).tokens, (std::vector<std::string>{"play", "[TrackTitle]", "by", "[Artist]"}));
}

TEST(Delexicalize, NoSlotsGivesTokenizedText) {
  const auto u = make_utterance({{"Hello there!", std::nullopt}}, "Greet");
  EXPECT_EQ(delexicalize(u).tokens, tokenize("Hello there!"));
}

TEST(Relexicalize, SingleValueAndIdentity) {
  SlotDictionary slots;
  slots.add("City", "paris");
  EXPECT_EQ(relexicalize(Pattern{{"weather", "in", "[City]"}}, slots, 1), "weather in paris");
  EXPECT_EQ(relexicalize(Pattern{{"hello", "there"}}, slots, 1), "hello there");
}

TEST(Relexicalize, DeterministicPerSeed) {
  SlotDictionary slots;
  for (auto c : {"paris", "lyon", "nice", "brest"}) slots.add("City", c);
  const Pattern p{{"[City]", "to", "[City]"}};
  EXPECT_EQ(relexicalize(p, slots, 77), relexicalize(p, slots, 77));
}

TEST(Relexicalize, UnknownSlotThrows) {
  SlotDictionary slots;
  EXPECT_THROW(relexicalize(Pattern{{"[Nope]"}}, slots, 0), UnknownSlotError);
}

TEST(Relexicalize, RoundTripReproducesNormalizedText) {
  const std::vector<Utterance> utts = {
      weather_in_paris(),
      make_utterance({{"Book a table for ", std::nullopt}, {"4", "party_size_number"}, {" at ", std::nullopt},
                      {"Chez Panisse", "restaurant_name"}, {"!", std::nullopt}},
                     "BookRestaurant"),
      make_utterance({{"Add ", std::nullopt}, {"Don't Stop Me Now", "track"}, {" to my list", std::nullopt}},
                     "AddToPlaylist")};
  for (const auto& u : utts) {
    SlotDictionary own;
    const auto p = delexicalize(u, own);
    EXPECT_EQ(relexicalize(p, own, 5), normalize_text(u.raw_text));
  }
}

TEST(Validate, EmptyChunkListRejected) {
  Utterance u;
  u.intent = "X";
  EXPECT_THROW(validate_utterance(u), ValidationError);
}

TEST(LoadDataset, SingleOneChunkUtterance) {
  const auto dir = temp_dir("single");
  std::ofstream(dir / "one.json") << R"({"Hello": [{"data": [{"text": "hi there"}]}]})";
  const auto d = load_dataset(dir / "one.json");
  EXPECT_EQ(d.size(), 1u);
  EXPECT_EQ(d.intents, (std::vector<std::string>{"Hello"}));
  EXPECT_EQ(d.patterns[0].tokens, (std::vector<std::string>{"hi", "there"}));
}

TEST(LoadDataset, DirectoryOfFilesSortsIntentsAndFillsSlots) {
  const auto dir = temp_dir("dir");
  std::ofstream(dir / "b.json") << R"({"PlayMusic": [{"data": [{"text": "play "}, {"text": "Adele", "entity": "artist"}]}]})";
  std::ofstream(dir / "a.json") << R"({"GetWeather": [{"data": [{"text": "rain in "}, {"text": "Oslo", "entity": "city"}]}]})";
  const auto d = load_dataset(dir);
  EXPECT_EQ(d.intents, (std::vector<std::string>{"GetWeather", "PlayMusic"}));
  EXPECT_EQ(d.slots.values.at("artist"), (std::vector<std::string>{"adele"}));
  EXPECT_EQ(d.slots.values.at("city"), (std::vector<std::string>{"oslo"}));
}

TEST(LoadDataset, MalformedJsonReportsPosition) {
  const auto dir = temp_dir("bad");
  std::ofstream(dir / "bad.json") << "{\n  \"X\": [ {\"data\": ]\n}";
  try {
    load_dataset(dir / "bad.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("2:"), std::string::npos) << e.what();
  }
}

TEST(LoadDataset, EmptyChunkListIsValidationError) {
  const auto dir = temp_dir("empty");
  std::ofstream(dir / "e.json") << R"({"X": [{"data": []}]})";
  EXPECT_THROW(load_dataset(dir / "e.json"), ValidationError);
}

TEST(LoadDataset, SaveThenLoadRoundTrips) {
  const auto dir = temp_dir("roundtrip");
  const auto d = Dataset::from_utterances({weather_in_paris(), make_utterance({{"play jazz", std::nullopt}}, "PlayMusic")});
  save_dataset(d, dir / "d.json");
  const auto e = load_dataset(dir / "d.json");
  EXPECT_EQ(e.intents, d.intents);
  std::multiset<std::string> a, b;
  for (const auto& p : d.patterns) a.insert(p.joined());
  for (const auto& p : e.patterns) b.insert(p.joined());
  EXPECT_EQ(a, b);
}

Dataset small_dataset() {
  return Dataset::from_utterances({make_utterance({{"play some jazz", std::nullopt}}, "PlayMusic"),
                                   make_utterance({{"play ", std::nullopt}, {"Adele", "artist"}}, "PlayMusic"),
                                   weather_in_paris()});
}

TEST(Vocabulary, SpecialsAndEveryToken) {
  const auto d = small_dataset();
  const auto v = build_vocabulary(d);
  std::set<std::string> distinct;
  for (const auto& p : d.patterns) distinct.insert(p.tokens.begin(), p.tokens.end());
  EXPECT_EQ(v.size(), distinct.size() + 4);
  EXPECT_EQ(v.token(Vocabulary::kPad), "<pad>");
  EXPECT_EQ(v.id("never-seen"), Vocabulary::kUnk);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(static_cast<int>(i))), static_cast<int>(i));
}

TEST(Vocabulary, HighMinCountLeavesOnlySpecials) {
  EXPECT_EQ(build_vocabulary(small_dataset(), 1000).size(), 4u);
}

TEST(Vocabulary, SharedTokensGetOneId) {
  const auto a = small_dataset();
  const auto b = Dataset::from_utterances({make_utterance({{"play weather", std::nullopt}}, "Other")});
  const auto v = build_vocabulary(std::vector<const Dataset*>{&a, &b});
  int plays = 0;
  for (const auto& t : v.tokens()) plays += t == "play";
  EXPECT_EQ(plays, 1);
}

TEST(Vocabulary, IndexOutOfRangeThrows) {
  const auto v = build_vocabulary(small_dataset());
  EXPECT_THROW(v.token(static_cast<int>(v.size())), IndexError);
}

TEST(EncodePattern, EmptyPattern) {
  const auto v = build_vocabulary(small_dataset());
  EXPECT_EQ(encode_pattern(Pattern{}, v, 5),
            (std::vector<int>{Vocabulary::kSos, Vocabulary::kEos, Vocabulary::kPad, Vocabulary::kPad, Vocabulary::kPad}));
}

TEST(EncodePattern, TruncatesToMaxLenEndingInEos) {
  const auto v = build_vocabulary(small_dataset());
  Pattern long_p;
  for (int i = 0; i < 25; ++i) long_p.tokens.push_back("play");
  const auto ids = encode_pattern(long_p, v, 20);
  EXPECT_EQ(ids.size(), 20u);
  EXPECT_EQ(ids.back(), Vocabulary::kEos);
}

TEST(EncodePattern, OneUnknownToken) {
  const auto v = build_vocabulary(small_dataset());
  const auto ids = encode_pattern(Pattern{{"play", "zzz", "jazz"}}, v, 10);
  EXPECT_EQ(std::count(ids.begin(), ids.end(), Vocabulary::kUnk), 1);
  EXPECT_EQ(ids.size(), 10u);
}

Dataset many(std::size_t per_intent, int intents) {
  std::vector<Utterance> utts;
  for (int k = 0; k < intents; ++k) {
    for (std::size_t i = 0; i < per_intent; ++i) {
      utts.push_back(make_utterance({{"query " + std::to_string(i), std::nullopt}}, "I" + std::to_string(k)));
    }
  }
  return Dataset::from_utterances(std::move(utts));
}

TEST(Subsample, BalancedPigeonhole) {
  const auto d = many(50, 7);
  const auto s = subsample(d, 200, 3);
  std::map<std::string, int> per;
  for (const auto& u : s.utterances) ++per[u.intent];
  EXPECT_EQ(per.size(), 7u);
  for (const auto& [i, c] : per) EXPECT_TRUE(c == 28 || c == 29) << i << " " << c;
}

TEST(Subsample, FullDrawAndDeterminism) {
  const auto d = many(10, 3);
  const auto all = subsample(d, d.size(), 1);
  std::multiset<std::string> a, b;
  for (const auto& u : d.utterances) a.insert(u.intent + u.raw_text);
  for (const auto& u : all.utterances) b.insert(u.intent + u.raw_text);
  EXPECT_EQ(a, b);
  EXPECT_EQ(subsample(d, 12, 9).utterances, subsample(d, 12, 9).utterances);
}

TEST(Subsample, TooManyThrows) {
  EXPECT_THROW(subsample(many(2, 2), 5, 0), SizeError);
}

TEST(PatternsCsv, HeaderAndQuoting) {
  const auto d = Dataset::from_utterances({make_utterance({{"hi, there", std::nullopt}}, "Greet")});
  std::ostringstream out;
  write_patterns_csv(d, out);
  EXPECT_NE(out.str().find("\"hi , there\""), std::string::npos) << out.str();
}

}  // namespace
}  // namespace cvaegen
