#pragma once

#include <span>
#include <string>
#include <string_view>

#include "mcuq/backend.hpp"

namespace mcuq::prompts {

// Prompt templates sent to HTTP backends. Bump the version whenever the
// wording changes; it is recorded as part of the judge id.
inline constexpr std::string_view kVersion = "v1";

inline constexpr std::string_view kAnswerTemplate =
    "Answer the following question in a single brief but complete sentence.\n"
    "Question: {question}\n"
    "Answer:";

inline constexpr std::string_view kEntailmentTemplate =
    "We are evaluating answers to the question \"{question}\"\n"
    "Here are two possible answers:\n"
    "Possible Answer 1: {answer_a}\n"
    "Possible Answer 2: {answer_b}\n"
    "Does Possible Answer 1 semantically entail Possible Answer 2? Respond with yes or no.\n"
    "Response:";

inline constexpr std::string_view kCorrectnessTemplate =
    "We are assessing the quality of answers to the following question: {question}\n"
    "The expected answer is: {reference}\n"
    "The proposed answer is: {answer}\n"
    "Within the context of the question, does the proposed answer mean the same as the expected "
    "answer? Respond only with yes or no.\n"
    "Response:";

// Few-shot exemplars are rendered ahead of the query, one block each.
inline constexpr std::string_view kPTrueTemplate =
    "{examples}"
    "Question: {question}\n"
    "Brainstormed Answers: {candidates}\n"
    "Possible answer: {answer}\n"
    "Is the possible answer:\n"
    " (A) True\n"
    " (B) False\n"
    "The possible answer is:";

std::string render_answer(std::string_view question);
std::string render_entailment(std::string_view question, std::string_view answer_a, std::string_view answer_b);
std::string render_correctness(std::string_view question, std::string_view reference, std::string_view answer);
std::string render_p_true(std::string_view question, std::span<const std::string> candidates,
                          std::string_view answer, std::span<const FewShotExample> few_shot);

// Normalizes a judge reply: skips leading whitespace and punctuation, then
// matches "yes"/"no" case-insensitively. Throws JudgeParseError otherwise.
bool parse_yes_no(std::string_view reply);

}  // namespace mcuq::prompts
