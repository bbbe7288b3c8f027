#include "dragun/questions/question.hpp"

#include "dragun/error.hpp"

namespace dragun::questions {

std::string_view to_string(QuestionStatus s) {
    switch (s) {
        case QuestionStatus::candidate: return "candidate";
        case QuestionStatus::rejected_compound: return "rejected_compound";
        case QuestionStatus::rejected_length: return "rejected_length";
        case QuestionStatus::selected: return "selected";
    }
    return "candidate";
}

QuestionStatus parse_status(std::string_view s) {
    if (s == "candidate") return QuestionStatus::candidate;
    if (s == "rejected_compound") return QuestionStatus::rejected_compound;
    if (s == "rejected_length") return QuestionStatus::rejected_length;
    if (s == "selected") return QuestionStatus::selected;
    throw DataError("unknown question status '" + std::string(s) + "'");
}

nlohmann::json to_json(const QualityMetrics& q) {
    nlohmann::json j = {
        {"tfidf_cosine", q.tfidf_cosine},
        {"jaccard", q.jaccard},
        {"embed_cosine", q.embed_cosine},
    };
    if (q.craap) {
        nlohmann::json c = nlohmann::json::object();
        const auto values = q.craap->values();
        for (std::size_t i = 0; i < values.size(); ++i) c[std::string(CraapScores::kNames[i])] = values[i];
        j["craap"] = std::move(c);
    } else {
        j["craap"] = nullptr;
    }
    if (q.craap_flagged) j["craap_flagged"] = true;
    return j;
}

QualityMetrics quality_from_json(const nlohmann::json& j) {
    QualityMetrics q;
    q.tfidf_cosine = j.at("tfidf_cosine").get<double>();
    q.jaccard = j.at("jaccard").get<double>();
    q.embed_cosine = j.at("embed_cosine").get<double>();
    if (j.contains("craap") && j["craap"].is_object()) {
        const auto& c = j["craap"];
        q.craap = CraapScores{c.at("currency").get<int>(), c.at("relevance").get<int>(), c.at("authority").get<int>(),
                              c.at("accuracy").get<int>(), c.at("purpose").get<int>()};
    }
    q.craap_flagged = j.value("craap_flagged", false);
    return q;
}

}  // namespace dragun::questions
