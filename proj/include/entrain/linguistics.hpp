#pragma once

// Utterance -> search query: tokenization, stop-word and part-of-speech
// filtering, spelling normalization and cue prefixing.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/bundled_lexicon.hpp"
#include "entrain/error.hpp"

namespace entrain {

enum class Speaker { Director, Matcher };

struct Utterance {
    std::string raw_text;
    Speaker speaker = Speaker::Director;
    std::int64_t timestamp_ms = 0;
    int round = 0;
    std::optional<std::string> intended_target;
};

inline constexpr std::string_view kDefaultCue = "tangram figure";

struct Query {
    std::vector<std::string> tokens;
    std::string cue{kDefaultCue};
    std::string rendered;
};

enum class Pos : std::uint8_t { N = 1, V = 2, ADJ = 4, ADV = 8, CONJ = 16, OTHER = 32 };
using PosSet = std::uint8_t;

inline std::optional<Pos> pos_from_string(std::string_view s) {
    if (s == "N") return Pos::N;
    if (s == "V") return Pos::V;
    if (s == "ADJ") return Pos::ADJ;
    if (s == "ADV") return Pos::ADV;
    if (s == "CONJ") return Pos::CONJ;
    if (s == "OTHER") return Pos::OTHER;
    return std::nullopt;
}

class Stoplist {
public:
    Stoplist() = default;
    explicit Stoplist(std::set<std::string> words) : words_(std::move(words)) {}

    /// One token per line; blank lines and lines starting with '#' are ignored.
    static Stoplist parse(std::string_view text) {
        std::set<std::string> words;
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) {
            std::erase_if(line, [](unsigned char c) { return std::isspace(c); });
            if (line.empty() || line.front() == '#') continue;
            std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) { return std::tolower(c); });
            words.insert(line);
        }
        return Stoplist(std::move(words));
    }
    static Stoplist bundled() { return parse(bundled::kStoplist); }
    static Stoplist load(const std::filesystem::path& path);

    bool contains(std::string_view w) const { return words_.contains(std::string(w)); }
    std::size_t size() const { return words_.size(); }

private:
    std::set<std::string> words_;
};

class Lexicon {
public:
    Lexicon() = default;

    /// `token<TAB>tags`, tags separated by commas or spaces.
    static Lexicon parse(std::string_view text) {
        Lexicon lex;
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) {
                throw Error(Errc::InvalidConfig, "lexicon line " + std::to_string(lineno) + ": missing tab");
            }
            std::string word = line.substr(0, tab);
            std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
            std::string tags = line.substr(tab + 1);
            std::replace(tags.begin(), tags.end(), ',', ' ');
            std::istringstream ts(tags);
            PosSet set = 0;
            for (std::string tag; ts >> tag;) {
                const auto pos = pos_from_string(tag);
                if (!pos) throw Error(Errc::InvalidConfig, "lexicon line " + std::to_string(lineno) + ": tag " + tag);
                set |= static_cast<PosSet>(*pos);
            }
            lex.add(word, set);
        }
        return lex;
    }
    static Lexicon bundled() { return parse(bundled::kLexicon); }
    static Lexicon load(const std::filesystem::path& path);

    void add(const std::string& word, PosSet tags) { entries_[word] |= tags; }
    bool contains(std::string_view w) const { return entries_.contains(std::string(w)); }
    std::optional<PosSet> tags(std::string_view w) const {
        if (auto it = entries_.find(std::string(w)); it != entries_.end()) return it->second;
        return std::nullopt;
    }
    const std::map<std::string, PosSet>& entries() const { return entries_; }

private:
    std::map<std::string, PosSet> entries_;
};

namespace detail {

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

inline Stoplist Stoplist::load(const std::filesystem::path& path) { return parse(detail::slurp(path)); }
inline Lexicon Lexicon::load(const std::filesystem::path& path) { return parse(detail::slurp(path)); }

/// Lowercased tokens; apostrophes are dropped, any other ASCII punctuation or
/// whitespace separates tokens. Bytes >= 0x80 are kept as word characters.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c == '\'') continue;
        if (std::isalnum(c) || c >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline bool keeps_pos(const Lexicon& lex, std::string_view token) {
    const auto tags = lex.tags(token);
    if (!tags) return true;  // unknown words are assumed to carry content
    constexpr PosSet content = static_cast<PosSet>(Pos::N) | static_cast<PosSet>(Pos::V) | static_cast<PosSet>(Pos::CONJ);
    return (*tags & content) != 0;
}

inline std::vector<std::string> filter_tokens(const std::vector<std::string>& tokens, const Stoplist& stop,
                                              const Lexicon& lex) {
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        if (!stop.contains(t) && keeps_pos(lex, t)) out.push_back(t);
    }
    return out;
}

inline std::vector<std::string> tokenize_and_filter(const Utterance& u, const Stoplist& stop, const Lexicon& lex) {
    auto out = filter_tokens(tokenize(u.raw_text), stop, lex);
    if (out.empty()) throw Error(Errc::EmptyContent, "no content tokens in '" + u.raw_text + "'");
    return out;
}

/// Optimal-string-alignment form of the Damerau-Levenshtein distance.
inline std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
    for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
            if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
                d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
            }
        }
    }
    return d[n][m];
}

inline constexpr std::size_t kMaxSpellingDistance = 2;

inline std::string normalize_token(const std::string& token, const Lexicon& lex) {
    if (lex.contains(token)) return token;
    std::size_t best = kMaxSpellingDistance + 1;
    const std::string* choice = nullptr;
    bool unique = false;
    for (const auto& [word, tags] : lex.entries()) {
        const std::size_t lower = word.size() > token.size() ? word.size() - token.size() : token.size() - word.size();
        if (lower > best) continue;
        const std::size_t dist = damerau_levenshtein(token, word);
        if (dist < best) {
            best = dist;
            choice = &word;
            unique = true;
        } else if (dist == best) {
            unique = false;
        }
    }
    return (choice != nullptr && unique) ? *choice : token;
}

inline std::vector<std::string> normalize_spelling(const std::vector<std::string>& tokens, const Lexicon& lex) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(normalize_token(t, lex));
    return out;
}

inline Query build_query(const std::vector<std::string>& tokens, std::string_view cue = kDefaultCue) {
    if (tokens.empty()) throw Error(Errc::EmptyQuery, "no tokens to build a query from");
    Query q;
    q.cue = std::string(cue);
    for (const auto& t : tokens) {
        if (t.empty()) continue;
        if (std::find(q.tokens.begin(), q.tokens.end(), t) == q.tokens.end()) q.tokens.push_back(t);
    }
    if (q.tokens.empty()) throw Error(Errc::EmptyQuery, "no tokens to build a query from");
    q.rendered = q.cue;
    for (const auto& t : q.tokens) {
        if (!q.rendered.empty()) q.rendered += ' ';
        q.rendered += t;
    }
    return q;
}

/// Sorted, deduplicated content tokens joined by single spaces.
inline std::string canonical_key(std::vector<std::string> tokens) {
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

/// Bundled or user-supplied word lists plus the query cue.
struct LanguageModel {
    Stoplist stoplist = Stoplist::bundled();
    Lexicon lexicon = Lexicon::bundled();
    std::string cue{kDefaultCue};
};

/// Full pipeline. Tokens that spelling normalization maps onto stop words or
/// non-content tags are filtered again so the query stays clean.
inline Query utterance_to_query(const Utterance& u, const LanguageModel& lm) {
    const auto filtered = tokenize_and_filter(u, lm.stoplist, lm.lexicon);
    auto tokens = filter_tokens(normalize_spelling(filtered, lm.lexicon), lm.stoplist, lm.lexicon);
    if (tokens.empty()) throw Error(Errc::EmptyContent, "no content tokens in '" + u.raw_text + "'");
    return build_query(tokens, lm.cue);
}

}  // namespace entrain
