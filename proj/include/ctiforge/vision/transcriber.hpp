#pragma once

#include <string>
#include <vector>

#include "ctiforge/ingest/document.hpp"
#include "ctiforge/ingest/fetch.hpp"
#include "ctiforge/llm/gateway.hpp"
#include "ctiforge/prompts.hpp"

namespace ctiforge::vision {

// ============================================================================
// Image transcription
// ============================================================================

struct TranscribeOptions {
    double temperature = 1.0;
    bool inline_images = false;  // fetch and inline bytes instead of passing the URL
    std::string prompt;          // image-analyzer prompt text
};

struct TranscribeOutcome {
    ingest::Document document;
    std::vector<std::string> warnings;
    int transcribed = 0;
    int unavailable = 0;
};

namespace detail {

inline std::string transcript_block(int ordinal, const std::string& text) {
    return "<<image " + std::to_string(ordinal) + " transcript>>\n" + text + "\n<<end>>";
}

inline std::string unavailable_marker(int ordinal) {
    return "[IMG:" + std::to_string(ordinal) + " UNAVAILABLE]";
}

inline llm::LlmRequest build_request(const ingest::ImageRef& image,
                                     const TranscribeOptions& options) {
    llm::LlmRequest request;
    request.system_prompt = options.prompt;
    request.temperature = options.temperature;
    request.response_schema = std::string(llm::schemas::kImageTranscript);
    if (options.inline_images && image.url.starts_with("http")) {
        auto fetched = ingest::fetch_bytes(image.url);
        if (fetched) {
            request.user_content.push_back(llm::ContentPart::image_bytes(
                base64_encode(fetched.value().body), fetched.value().media_type));
        } else {
            request.user_content.push_back(llm::ContentPart::image_url(image.url));
        }
    } else {
        request.user_content.push_back(llm::ContentPart::image_url(image.url));
    }
    if (!image.alt_text.empty())
        request.user_content.push_back(
            llm::ContentPart::make_text("Alt text: " + image.alt_text));
    return request;
}

}  // namespace detail

/// Transcribes every referenced image in one gateway batch and splices the
/// transcripts back at their placeholder positions in paragraph bodies and
/// the full text. A failed image degrades to an UNAVAILABLE marker instead of
/// failing the document.
inline TranscribeOutcome transcribe_images(ingest::Document doc, llm::Gateway& gateway,
                                           const TranscribeOptions& options) {
    TranscribeOutcome outcome;
    if (doc.images.empty()) {
        outcome.document = std::move(doc);
        return outcome;
    }

    std::vector<llm::LlmRequest> requests;
    requests.reserve(doc.images.size());
    for (const auto& image : doc.images) requests.push_back(detail::build_request(image, options));

    auto responses = gateway.complete_batch(requests);

    for (size_t i = 0; i < doc.images.size(); ++i) {
        const auto& image = doc.images[i];
        std::string token = ingest::image_placeholder(image.ordinal);
        std::string replacement;
        std::string transcript;
        if (responses[i].ok()) {
            transcript = responses[i].value().parsed.value("transcript", "");
            replacement = detail::transcript_block(image.ordinal, transcript);
            ++outcome.transcribed;
        } else {
            replacement = detail::unavailable_marker(image.ordinal);
            outcome.warnings.push_back("image " + std::to_string(image.ordinal) +
                                       " transcription failed: " +
                                       responses[i].error().format());
            ++outcome.unavailable;
        }
        for (auto& paragraph : doc.paragraphs) {
            if (paragraph.body.find(token) == std::string::npos) continue;
            paragraph.body = strings::replace_all(paragraph.body, token, replacement);
            if (!transcript.empty()) paragraph.image_transcripts.push_back(transcript);
        }
        doc.full_text = strings::replace_all(doc.full_text, token, replacement);
    }
    outcome.document = std::move(doc);
    return outcome;
}

}  // namespace ctiforge::vision
