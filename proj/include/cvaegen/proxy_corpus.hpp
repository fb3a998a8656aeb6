// SPDX-License-Identifier: Apache-2.0
//
// Synthetic stand-in for an intent benchmark plus an unlabelled reservoir.
//
// Utterances are sampled from small per-intent template grammars. Template
// syntax:
//   {a|b|}   alternation, one branch chosen uniformly (empty branch allowed,
//            may nest)
//   <slot>   a slot chunk whose value is drawn from the slot lexicon
// The seven benchmark intents mirror the public Snips custom-intent layout
// (intent names and entity labels); the reservoir mixes paraphrase twins of
// those intents under other names, neighbouring intents and far
// out-of-domain intents.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cvaegen/corpus.hpp"
#include "cvaegen/error.hpp"
#include "cvaegen/rng.hpp"

namespace cvaegen {

struct IntentGrammar {
  std::string intent;
  std::vector<std::string> templates;
};

using SlotLexicon = std::map<std::string, std::vector<std::string>>;

namespace detail {

class TemplateExpander {
 public:
  TemplateExpander(const SlotLexicon& lexicon, Rng& rng) : lexicon_(lexicon), rng_(rng) {}

  std::vector<SlotChunk> expand(const std::string& tmpl) {
    text_ = &tmpl;
    pos_ = 0;
    chunks_.clear();
    sequence(/*nested=*/false);
    if (pos_ != tmpl.size()) throw ParseError("template: unbalanced '}' in: " + tmpl);
    return tidy(std::move(chunks_));
  }

 private:
  void emit_text(char c) {
    if (chunks_.empty() || chunks_.back().is_slot()) chunks_.push_back({"", std::nullopt});
    chunks_.back().text += c;
  }

  // Expands until '|' or '}' (nested) or end of text.
  void sequence(bool nested) {
    const std::string& t = *text_;
    while (pos_ < t.size()) {
      const char c = t[pos_];
      if (nested && (c == '|' || c == '}')) return;
      if (c == '{') {
        ++pos_;
        alternation();
      } else if (c == '<') {
        const auto end = t.find('>', pos_);
        if (end == std::string::npos) throw ParseError("template: unterminated '<' in: " + t);
        const std::string slot = t.substr(pos_ + 1, end - pos_ - 1);
        auto it = lexicon_.find(slot);
        if (it == lexicon_.end() || it->second.empty()) {
          throw UnknownSlotError("template: no lexicon for slot '" + slot + "'");
        }
        chunks_.push_back({it->second[static_cast<std::size_t>(rng_.below(it->second.size()))], slot});
        pos_ = end + 1;
      } else {
        emit_text(c);
        ++pos_;
      }
    }
    if (nested) throw ParseError("template: unterminated '{' in: " + t);
  }

  // Chooses one branch of {...}; the others are skipped without emitting.
  void alternation() {
    const std::string& t = *text_;
    std::vector<std::size_t> starts{pos_};
    std::size_t depth = 0, i = pos_;
    for (; i < t.size(); ++i) {
      if (t[i] == '{') {
        ++depth;
      } else if (t[i] == '}') {
        if (depth == 0) break;
        --depth;
      } else if (t[i] == '|' && depth == 0) {
        starts.push_back(i + 1);
      }
    }
    if (i >= t.size()) throw ParseError("template: unterminated '{' in: " + t);
    const std::size_t close = i;
    pos_ = starts[static_cast<std::size_t>(rng_.below(starts.size()))];
    sequence(/*nested=*/true);
    pos_ = close + 1;
  }

  static std::vector<SlotChunk> tidy(std::vector<SlotChunk> chunks) {
    std::vector<SlotChunk> out;
    for (auto& c : chunks) {
      if (!c.is_slot()) {
        std::string collapsed;
        for (char ch : c.text) {
          if (ch == ' ' && !collapsed.empty() && collapsed.back() == ' ') continue;
          collapsed += ch;
        }
        c.text = std::move(collapsed);
        if (!out.empty() && !out.back().is_slot()) {
          out.back().text += c.text;
          continue;
        }
      }
      if (!c.text.empty()) out.push_back(std::move(c));
    }
    if (!out.empty() && !out.front().is_slot()) {
      auto& s = out.front().text;
      s.erase(0, s.find_first_not_of(' '));
    }
    if (!out.empty() && !out.back().is_slot()) {
      auto& s = out.back().text;
      const auto last = s.find_last_not_of(' ');
      s.erase(last == std::string::npos ? 0 : last + 1);
    }
    // Spaces adjacent to slot chunks can double up across a slot; fix text runs.
    for (std::size_t i = 1; i + 1 < out.size(); ++i) {
      if (!out[i].is_slot() && out[i].text.empty()) out[i].text = " ";
    }
    std::erase_if(out, [](const SlotChunk& c) { return c.text.empty(); });
    return out;
  }

  const SlotLexicon& lexicon_;
  Rng& rng_;
  const std::string* text_ = nullptr;
  std::size_t pos_ = 0;
  std::vector<SlotChunk> chunks_;
};

}  // namespace detail

/// Samples one utterance for `grammar`: a template uniformly, then its
/// alternations and slot values.
inline Utterance sample_utterance(const IntentGrammar& grammar, const SlotLexicon& lexicon, Rng& rng) {
  detail::TemplateExpander expander(lexicon, rng);
  const auto& tmpl = grammar.templates[static_cast<std::size_t>(rng.below(grammar.templates.size()))];
  auto chunks = expander.expand(tmpl);
  if (chunks.empty()) throw ValidationError("template expanded to nothing: " + tmpl);
  return make_utterance(std::move(chunks), grammar.intent);
}

inline const SlotLexicon& proxy_slot_lexicon() {
  static const SlotLexicon lexicon = {
      {"city", {"Paris", "New York", "Berlin", "Chicago", "Tokyo", "Boston", "Seattle", "Madrid",
                "Lyon", "Austin", "Denver", "Toronto", "Rome", "Dublin", "Oslo", "Miami",
                "San Francisco", "Portland", "Nashville", "Athens"}},
      {"country", {"France", "Japan", "Canada", "Italy", "Spain", "Brazil", "Kenya", "Norway",
                   "Mexico", "Australia"}},
      {"state", {"Texas", "Ohio", "Oregon", "Florida", "Alaska", "Utah", "Maine", "Nevada",
                 "Vermont", "Georgia"}},
      {"timeRange", {"tomorrow", "tonight", "this weekend", "next week", "at 5 pm", "on Monday",
                     "in two days", "this afternoon", "next Friday", "now", "at noon",
                     "on August 3rd", "in 20 minutes", "this evening", "next month"}},
      {"condition_description", {"rainy", "sunny", "snowy", "cloudy", "foggy", "stormy", "windy",
                                 "humid", "hail", "drizzle"}},
      {"condition_temperature", {"hot", "cold", "warm", "chilly", "freezing", "mild"}},
      {"spatial_relation", {"nearby", "close by", "near me", "around here", "in the area",
                            "within walking distance", "downtown"}},
      {"geographic_poi", {"Yellowstone", "Mount Rainier", "the Grand Canyon", "Lake Tahoe",
                          "Death Valley", "Niagara Falls", "Yosemite"}},
      {"current_location", {"here", "my location", "my current position", "where i am"}},
      {"artist", {"Bon Iver", "Adele", "Miles Davis", "Radiohead", "Beyonce", "Nina Simone",
                  "the Beatles", "Daft Punk", "Johnny Cash", "Bjork", "Coldplay", "Drake",
                  "Aretha Franklin", "Metallica", "Sia"}},
      {"music_item", {"song", "track", "album", "tune", "record", "artist", "soundtrack"}},
      {"playlist", {"Chill Vibes", "Workout Mix", "Road Trip", "Rainy Day", "Jazz Classics",
                    "Sunday Morning", "Party Hits", "Focus Flow", "Indie Gems", "Throwback"}},
      {"playlist_owner", {"my", "our", "Emma's", "the family", "my sister's"}},
      {"entity_name", {"Blue Monday", "River Flows", "Night Drive", "Golden Hour", "Paper Planes",
                       "Summer Rain"}},
      {"track", {"Skinny Love", "Hey Jude", "Halo", "Hallelujah", "Clocks", "Hurt", "Respect",
                 "Creep", "So What", "Chandelier"}},
      {"album", {"Kind of Blue", "OK Computer", "Abbey Road", "Discovery", "Lemonade",
                 "Vespertine", "Parachutes"}},
      {"year", {"1975", "1989", "2004", "the sixties", "the eighties", "2012", "1999"}},
      {"service", {"Spotify", "Deezer", "YouTube", "Pandora", "Groove Shark", "Last Fm",
                   "Itunes", "Netflix"}},
      {"genre", {"jazz", "rock", "pop", "blues", "techno", "folk", "classical", "soul", "hip hop",
                 "country"}},
      {"sort", {"latest", "newest", "most popular", "best", "top", "last", "greatest"}},
      {"restaurant_type", {"restaurant", "bistro", "pub", "diner", "brasserie", "cafe",
                           "steakhouse", "food truck", "tavern", "pizzeria"}},
      {"party_size_number", {"two", "three", "four", "five", "six", "2", "8", "ten", "one"}},
      {"party_size_description", {"me and my wife", "my friends and i", "the whole team",
                                  "my family", "my parents and me"}},
      {"restaurant_name", {"the Blue Door", "Chez Marie", "Golden Dragon", "Luigi's",
                           "the Olive Tree", "Sakura House"}},
      {"served_dish", {"sushi", "pizza", "tacos", "ramen", "oysters", "curry", "burgers",
                       "pasta", "dumplings", "steak"}},
      {"cuisine", {"italian", "thai", "french", "mexican", "indian", "greek", "korean",
                   "ethiopian"}},
      {"facility", {"a patio", "parking", "wifi", "outdoor seating", "wheelchair access",
                    "a bar"}},
      {"object_name", {"The Hobbit", "War and Peace", "Dune", "Moby Dick", "Pride and Prejudice",
                       "The Road", "Emma", "Ulysses", "The Wire", "Twin Peaks", "Hamlet",
                       "The Odyssey"}},
      {"object_type", {"book", "novel", "album", "tv show", "song", "game", "movie", "saga",
                       "textbook", "soundtrack", "picture", "trailer"}},
      {"rating_value", {"one", "two", "three", "four", "five", "1", "3", "4", "0", "six"}},
      {"best_rating", {"five", "6", "10", "5", "six"}},
      {"rating_unit", {"stars", "points"}},
      {"object_select", {"this", "current", "that", "the current", "this current"}},
      {"object_part_of_series_type", {"series", "chronicle", "saga", "book", "novel"}},
      {"movie_name", {"The Matrix", "Casablanca", "Vertigo", "Alien", "Amelie", "Jaws",
                      "Inception", "Rocky", "Heat", "Up"}},
      {"movie_type", {"movies", "films", "animated movies", "movie times", "film schedules",
                      "animated films"}},
      {"location_name", {"AMC Loews", "Cinemark", "Regal Cinemas", "the Odeon", "Showcase",
                         "the Grand Theater"}},
      {"object_location_type", {"movie theatre", "cinema", "movie house", "theatre",
                                "cinema complex"}},
      // Reservoir-only slots.
      {"time", {"6 am", "7:30", "noon", "midnight", "9 pm", "quarter past eight", "5 o'clock"}},
      {"duration", {"ten minutes", "an hour", "30 seconds", "five minutes", "two hours"}},
      {"contact", {"mom", "Alex", "John", "my boss", "Sarah", "the office", "grandma"}},
      {"message", {"i'm running late", "see you soon", "call me back", "happy birthday",
                   "dinner is ready"}},
      {"room", {"kitchen", "living room", "bedroom", "bathroom", "garage", "office"}},
      {"device", {"lights", "lamp", "fan", "heater", "tv", "coffee machine"}},
      {"temperature", {"20 degrees", "72 degrees", "180 degrees", "350 degrees", "low",
                       "high"}},
      {"item", {"milk", "eggs", "bread", "apples", "coffee", "batteries", "paper towels"}},
      {"news_topic", {"sports", "politics", "technology", "business", "science", "local"}},
      {"language", {"spanish", "german", "french", "japanese", "italian", "chinese"}},
      {"phrase", {"good morning", "thank you", "where is the station", "how much is it"}},
      {"destination", {"the airport", "the station", "downtown", "work", "home", "the mall"}},
      {"station", {"BBC Radio", "NPR", "Radio Nova", "Jazz FM", "KEXP", "Classic FM"}},
      {"podcast", {"Radiolab", "Serial", "The Daily", "Planet Money", "Hardcore History"}},
      {"event", {"dentist appointment", "team meeting", "yoga class", "lunch with Sam",
                 "flight"}},
      {"sport_team", {"the Lakers", "Arsenal", "the Yankees", "the Bulls", "Real Madrid"}},
  };
  return lexicon;
}

/// The seven benchmark intents.
inline const std::vector<IntentGrammar>& proxy_benchmark_grammars() {
  static const std::vector<IntentGrammar> grammars = {
      {"AddToPlaylist",
       {"{|please |can you |could you |i want to |i'd like to }add {this|the|a} <music_item> to {my|the} <playlist> playlist",
        "{|please }add <artist> to {my|the} {playlist |}<playlist>",
        "{|can you }put {this|the|that} <music_item> {on|onto|in} <playlist>",
        "add <track> by <artist> to <playlist_owner> <playlist> {playlist|list|collection}",
        "{i want to |i'd like to |}add <entity_name> to {my|the} {playlist|list} <playlist>",
        "{include|insert} <artist> {in|into} {my |the |}<playlist> {playlist|}",
        "{add|put} {a|another|this} <artist> <music_item> {to|onto|in} <playlist_owner> <playlist>",
        "{can you |please |}save {this|the current|that} <music_item> {to|in} {my |}<playlist> {playlist|}",
        "{add|put} <album> {to|onto} {my|the} <playlist> {playlist|collection|}",
        "i {want|need} {<track>|this <music_item>} {in|on|added to} {my|the} <playlist> playlist",
        "{add|append} {the|a} {<genre> |}<music_item> {to|onto} <playlist>"}},
      {"BookRestaurant",
       {"{|please |can you |could you |i want to |i'd like to |i need to }book a {table|reservation} for <party_size_number> {at|in} a <restaurant_type> {in|near} <city>",
        "{book|reserve} a {table|spot|place} {at|in} <restaurant_name> for <party_size_number> {people |}<timeRange>",
        "{i need|i want|i'd like} a {reservation|table} for <party_size_description> at a <cuisine> <restaurant_type> {in <state>|<spatial_relation>|in <city>}",
        "{book|reserve|find} a <restaurant_type> that serves <served_dish> {in|near} <city> {<timeRange>|for <party_size_number>|}",
        "{can you |please |}make a reservation {at|for} <restaurant_name> {<timeRange>|for <party_size_number> people}",
        "{book|reserve} {me |us |}a {table|seat} {<spatial_relation>|in <city>} {for <party_size_number>|<timeRange>} {at a <restaurant_type>|}",
        "{find|book} a {<cuisine> |}<restaurant_type> with <facility> {in|near} <city> for <party_size_number>",
        "i {want|would like} to {eat|dine|have dinner} at a <restaurant_type> {in <city>|<spatial_relation>} {<timeRange>|}",
        "{book|reserve} a <restaurant_type> for <party_size_description> {<timeRange>|in <state>}",
        "{table|reservation} for <party_size_number> at <restaurant_name> {<timeRange>|please|}"}},
      {"GetWeather",
       {"{|what is |what's }the weather {forecast |}{for|in} <city> {<timeRange>|}",
        "what will the weather be {like |}{in <city>|<timeRange>|in <city> <timeRange>|at <geographic_poi>}",
        "is it {going to be |}<condition_description> in <city> {<timeRange>|}",
        "will it be <condition_temperature> {in <country>|in <state>|<spatial_relation>|here} {<timeRange>|}",
        "{tell me|give me|show me} the {weather|forecast|weather forecast} for <city>",
        "how's the weather {supposed to be |going to be |}{on <timeRange>|<timeRange>|in <city>}",
        "{will|is} there be <condition_description> {in <city>|at <geographic_poi>|<spatial_relation>} {<timeRange>|}",
        "{what is|what's} the forecast {for|in} {<geographic_poi>|<country>|<state>} {<timeRange>|}",
        "{is it|will it be} <condition_temperature> {at|in} <geographic_poi> {<timeRange>|}",
        "{how|what} {is|will} the weather {be |}<timeRange> {in|at} <current_location>",
        "{do i need|should i bring} an umbrella {in <city>|<timeRange>}",
        "forecast for <city> {<timeRange>|}"}},
      {"PlayMusic",
       {"{|please |can you |could you |i want to |i'd like to }play {some |}<artist>",
        "play {some|a|the} {<genre> |}<music_item> by <artist> {on <service>|}",
        "{play|put on|start} <track> {by <artist>|on <service>|}",
        "i {want|would like} to {hear|listen to} {some |}<genre> {music|songs|tunes} {on <service>|}",
        "play the <sort> <music_item> {from|of} <year> {on <service>|}",
        "{can you |}play <album> {by <artist>|} {on <service>|}",
        "{play|start playing|put on} {something|music} {by <artist>|from <year>|from <artist> on <service>}",
        "{listen to|play} {a|some|the} <sort> <genre> <music_item> {on <service>|}",
        "{use|open} <service> {to play|and play} {<track>|<artist>|some <genre>}",
        "play {me |}{a <music_item> from <year>|the <sort> <artist> <music_item>}",
        "{i want to hear|let me hear|play} <track> {by <artist>|}"}},
      {"RateBook",
       {"{|please |i want to |i'd like to }rate {this|the|that} <object_type> <rating_value> {out of <best_rating>|<rating_unit>|}",
        "{give|rate} <object_name> <rating_value> {<rating_unit>|out of <best_rating>|}",
        "i {would |}{rate|give} <object_select> <object_type> {a |}<rating_value> {out of <best_rating>|<rating_unit>|}",
        "rate the <object_part_of_series_type> <object_name> <rating_value> {<rating_unit>|out of <best_rating>}",
        "{give|award} {this|the current|that} <object_type> {a rating of |}<rating_value> {out of <best_rating>|<rating_unit>}",
        "{my|a} rating for <object_name> is <rating_value> {out of <best_rating>|<rating_unit>|}",
        "{rate|score} <object_select> <object_part_of_series_type> {a |}<rating_value> {of <best_rating>|<rating_unit>|}",
        "<object_name> {deserves|gets} <rating_value> {<rating_unit>|out of <best_rating>}",
        "{i think |}{this|the} <object_type> {is worth|deserves} <rating_value> <rating_unit>"}},
      {"SearchCreativeWork",
       {"{|please |can you |could you }find the <object_type> <object_name>",
        "{where can i|how can i|can i} {watch|find|see|get} the <object_type> {<object_name>|called <object_name>}",
        "{search for|look for|look up} {the |}{<object_type> |}<object_name>",
        "i {want|would like} to {see|read|find} {the <object_type> called <object_name>|<object_name>}",
        "{can you |}find me {the|a} <object_name> <object_type>",
        "{show me|get me|give me} {the|a} <object_type> {titled|named|called} <object_name>",
        "{find|search} {the|a} <object_type> {<object_name>|called <object_name>} {please|}",
        "{i'm looking for|i am looking for|looking for} {a|the} <object_type> {called|named} <object_name>",
        "{help me find|i need} {the|a} <object_name> <object_type>"}},
      {"SearchScreeningEvent",
       {"{what|which} <movie_type> are {playing|showing} {at <location_name>|<spatial_relation>|in the <spatial_relation> <object_location_type>} {<timeRange>|}",
        "{find|show me|get} {movie schedules|the schedule|<movie_type>} {for|at} {the |}<object_location_type> <spatial_relation>",
        "when is <movie_name> {playing|showing} {at <location_name>|<spatial_relation>|<timeRange>}",
        "{show me|tell me|what are} the {times|showtimes|schedule} for <movie_name> {<timeRange>|at <location_name>|}",
        "{is|will} <movie_name> {be |}{playing|showing} {at <location_name>|<timeRange>|in the <object_location_type>}",
        "{i want to|i'd like to|can i} see <movie_name> {at <location_name>|<timeRange>|<spatial_relation>}",
        "{find|look for} {a|the} <object_location_type> {<spatial_relation>|} {showing|playing} <movie_name>",
        "{what|which} <object_location_type> {is|are} {playing|showing} <movie_name> {<timeRange>|}",
        "{give me|find} the <movie_type> {at|in} <location_name> {<timeRange>|}"}},
  };
  return grammars;
}

/// Reservoir intents: paraphrase twins of benchmark intents under other names,
/// neighbouring intents, and far out-of-domain intents.
inline const std::vector<IntentGrammar>& proxy_reservoir_grammars() {
  static const std::vector<IntentGrammar> grammars = {
      // twins
      {"MusicOn",
       {"{|please }play {some |}<artist> {please|}",
        "{play|put on} {some|a} <genre> <music_item> {on <service>|}",
        "{i want to hear|let me hear|put on} {something by <artist>|<track>|some <genre>}",
        "{turn on|start} {the |}music {by <artist>|from <year>|}",
        "play {my|the} <sort> {songs|tracks|music} {on <service>|}"}},
      {"WeatherForecastQuery",
       {"{what's|what is} the {weather|forecast} {like |}{in <city>|for <city>|<timeRange>}",
        "{is it|will it be} <condition_description> {in <city>|<timeRange>|outside}",
        "{how|what} {cold|hot|warm} {is it|will it be} {in <city>|<timeRange>|outside}",
        "{tell me|give me} the {forecast|weather} {for <timeRange>|in <country>}",
        "{do i need|should i take} {a jacket|an umbrella|sunscreen} {<timeRange>|in <city>}"}},
      {"ReserveTable",
       {"{reserve|book} a table {for <party_size_number>|at <restaurant_name>} {<timeRange>|}",
        "{i'd like to|can i} {book|reserve} {a table|dinner} {at <restaurant_name>|for <party_size_number>} {<timeRange>|}",
        "{get|find} us a table {at a <cuisine> <restaurant_type>|<spatial_relation>} {<timeRange>|}"}},
      {"FindBook",
       {"{find|look up|search for} the {book|novel} <object_name>",
        "{where can i|can i} {buy|borrow|read} {the book |}<object_name>",
        "{who wrote|tell me about} <object_name>"}},
      {"MovieTimes",
       {"{what time|when} {is|does} <movie_name> {start|play|showing} {<timeRange>|at <location_name>|}",
        "{list|show} {the |}{movies|films} {playing|showing} {<timeRange>|<spatial_relation>}",
        "{any|are there} {good |}{movies|films} {on|playing} {<timeRange>|<spatial_relation>}"}},
      // neighbours
      {"PlayRadio",
       {"{play|tune in to|put on|turn on} {the radio station |}<station>",
        "{i want to|let me} listen to {the radio|<station>} {on <service>|}",
        "{turn on|switch on|start} the radio {please|}",
        "{play|find} {a|the} <genre> radio {station|channel} {on <service>|}"}},
      {"PlayPodcast",
       {"{play|resume|start} {the |}{latest |newest |}{episode of |}<podcast>",
        "{i want to|let me} listen to {the podcast |}<podcast> {please|}",
        "{find|search for} {a|the} podcast {about <news_topic>|called <podcast>}"}},
      {"VolumeControl",
       {"{turn|crank} {the volume|it|the music} {up|down} {a bit|please|}",
        "{increase|decrease|lower|raise} the volume {please|a little|}",
        "{mute|unmute} {the music|the speaker|everything}"}},
      {"StopMusic",
       {"{stop|pause} {the music|playback|the song|this track|everything} {please|}",
        "{skip|next} {this song|track|please}",
        "{resume|continue} {the music|playing|the song}"}},
      {"GetNews",
       {"{what's|what is} the {latest |}news {about <news_topic>|<timeRange>|}",
        "{read|give|tell} me the {<news_topic> |}{headlines|news}",
        "{any|are there} {updates|news} {on <news_topic>|about <sport_team>}"}},
      {"SportsScore",
       {"{what's|what was} the score {of the <sport_team> game|for <sport_team>} {<timeRange>|}",
        "{did|when do} <sport_team> {win|play} {<timeRange>|}"}},
      // far
      {"SetAlarm",
       {"{set|create|make} an alarm {for|at} <time> {<timeRange>|}",
        "wake me up {at <time>|<timeRange> at <time>|in <duration>}",
        "{cancel|delete|remove} {my|the} alarm {for <time>|}"}},
      {"SetTimer",
       {"{set|start} a timer for <duration> {please|}",
        "{how much time is left|how long is left} on {my|the} timer",
        "{cancel|stop|pause} the timer"}},
      {"SendMessage",
       {"{send|text} {a message to |}<contact> {saying|that} <message>",
        "{tell|message} <contact> <message>",
        "{write|send} a {text|message} to <contact>"}},
      {"CallContact",
       {"{call|phone|ring|dial} <contact> {please|now|}",
        "{can you |}{call|phone} <contact> {on speaker|at work|}"}},
      {"TurnOnLights",
       {"{turn|switch} {on|off} the <device> in the <room>",
        "{dim|brighten} the <device> {in the <room>|a bit|}",
        "{turn|switch} {on|off} {all the |}<device> {please|}"}},
      {"SetThermostat",
       {"{set|change} the {thermostat|heating|temperature} to <temperature> {in the <room>|}",
        "{make|keep} it {warmer|cooler} in the <room>",
        "{what's|what is} the temperature {inside|in the <room>}"}},
      {"SetOven",
       {"{preheat|set} the oven to <temperature> {for <duration>|}",
        "{turn|switch} {on|off} the oven {please|}",
        "{bake|cook} {for|at} {<duration>|<temperature>}"}},
      {"AddToShoppingList",
       {"add <item> to {my|the} shopping list",
        "{put|write} <item> on {my|the} {shopping|grocery} list",
        "{what's|what is} on {my|the} {shopping|grocery} list",
        "{remind me to buy|i need to buy} <item>"}},
      {"Translate",
       {"{how do you say|translate} <phrase> {in|into} <language>",
        "{what's|what is} <phrase> in <language>",
        "{translate|say} this {to|into} <language> {please|}"}},
      {"GetDirections",
       {"{how do i get|give me directions|show me the way} to <destination> {from <current_location>|}",
        "{how long|how far} {is it|does it take} to <destination> {<timeRange>|}",
        "{navigate|drive|take me} to <destination>"}},
      {"BookTaxi",
       {"{book|get|call|order} {me |}a {taxi|cab|ride} to <destination> {<timeRange>|at <time>|}",
        "i need a {taxi|cab|ride} {to <destination>|at <time>|<timeRange>}"}},
      {"CheckCalendar",
       {"{what's|what is} on my {calendar|agenda|schedule} {<timeRange>|}",
        "{when is|what time is} my <event> {<timeRange>|}",
        "{add|schedule|put} {a |my |}<event> {<timeRange>|at <time>} {on my calendar|}"}},
      {"Greeting",
       {"{hello|hi|hey} {there|assistant|}",
        "{good morning|good night|good evening} {assistant|}",
        "{thank you|thanks} {so much|a lot|}",
        "{how are you|what's up} {today|}"}},
  };
  return grammars;
}

struct ProxyCorpusOptions {
  std::size_t train_per_intent = 2000;
  std::size_t validate_per_intent = 100;
  std::size_t reservoir_per_intent = 200;
  std::uint64_t seed = 2020;
};

struct ProxyCorpus {
  Dataset train;
  Dataset validate;
  Dataset reservoir;
};

inline Dataset sample_dataset(const std::vector<IntentGrammar>& grammars, std::size_t per_intent,
                              Rng& rng) {
  std::vector<Utterance> utts;
  utts.reserve(grammars.size() * per_intent);
  for (const auto& g : grammars) {
    for (std::size_t i = 0; i < per_intent; ++i) {
      utts.push_back(sample_utterance(g, proxy_slot_lexicon(), rng));
    }
  }
  return Dataset::from_utterances(std::move(utts));
}

inline ProxyCorpus make_proxy_corpus(const ProxyCorpusOptions& options = {}) {
  Rng train_rng(Rng::derive(options.seed, 1));
  Rng validate_rng(Rng::derive(options.seed, 2));
  Rng reservoir_rng(Rng::derive(options.seed, 3));
  return {sample_dataset(proxy_benchmark_grammars(), options.train_per_intent, train_rng),
          sample_dataset(proxy_benchmark_grammars(), options.validate_per_intent, validate_rng),
          sample_dataset(proxy_reservoir_grammars(), options.reservoir_per_intent, reservoir_rng)};
}

/// Writes the benchmark layout: train_<Intent>_full.json and
/// validate_<Intent>.json per intent under `dir`/train and `dir`/validate,
/// and `dir`/reservoir/reservoir.json.
inline void write_proxy_corpus(const ProxyCorpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "validate");
  fs::create_directories(dir / "reservoir");
  for (const auto& intent : corpus.train.intents) {
    save_dataset(corpus.train.select(corpus.train.indices_of(intent)),
                 dir / "train" / ("train_" + intent + "_full.json"));
    save_dataset(corpus.validate.select(corpus.validate.indices_of(intent)),
                 dir / "validate" / ("validate_" + intent + ".json"));
  }
  save_dataset(corpus.reservoir, dir / "reservoir" / "reservoir.json");
}

}  // namespace cvaegen
