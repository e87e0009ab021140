#include <doctest.h>

#include <random>

#include "guided/protocol.hpp"
#include "support/case_dialogues.hpp"
#include "support/generators.hpp"

using namespace guided;
using namespace guided::protocol;

TEST_SUITE_BEGIN("protocol");

TEST_CASE("score line: affirmation turn") {
    const auto parsed = parse_score_line("Correct. The values are 3 and 9.\n[SCORE] hallucination_detect=1");
    REQUIRE(parsed.ok());
    CHECK(parsed.signal.hallucination_detect == HallucinationScore::Valid);
    CHECK_FALSE(parsed.signal.is_stop);
    CHECK(parsed.signal.critique == "Correct. The values are 3 and 9.");
}

TEST_CASE("score line: stop turn with trailing score") {
    const auto parsed = parse_score_line("###STOP###\n[SCORE] hallucination_detect=1");
    REQUIRE(parsed.ok());
    CHECK(parsed.signal.hallucination_detect == HallucinationScore::Valid);
    CHECK(parsed.signal.is_stop);
    CHECK_FALSE(parsed.protocol_warning);
}

TEST_CASE("score line: out-of-alphabet value is malformed") {
    const auto parsed = parse_score_line("Reason for Error ...\n[SCORE] hallucination_detect=2");
    CHECK(parsed.error == ScoreParseError::MalformedScore);
}

TEST_CASE("score line: missing and duplicated lines") {
    CHECK(parse_score_line("no verdict here").error == ScoreParseError::MissingScoreLine);
    CHECK(parse_score_line("[SCORE] hallucination_detect=1\nmore\n[SCORE] hallucination_detect=0")
              .error == ScoreParseError::MultipleScoreLines);
}

TEST_CASE("score line: mid-message score line is extracted") {
    const auto parsed = parse_score_line(
        "Use the identity.\n[SCORE] hallucination_detect=0\nPlease identify the correct choice.");
    REQUIRE(parsed.ok());
    CHECK(parsed.signal.hallucination_detect == HallucinationScore::Hallucinated);
    CHECK(parsed.signal.critique == "Use the identity.\nPlease identify the correct choice.");
}

TEST_CASE("score line: score-first stop still counts as a clean stop") {
    const auto parsed = parse_score_line("[SCORE] hallucination_detect=1\n###STOP###");
    REQUIRE(parsed.ok());
    CHECK(parsed.signal.is_stop);
    CHECK_FALSE(parsed.protocol_warning);
}

TEST_CASE("stop strictness: prose around the token") {
    const std::string turn = "All good, closing now.\n###STOP###\n[SCORE] hallucination_detect=1";
    const auto strict = parse_score_line(turn, StopPolicy::Strict);
    REQUIRE(strict.ok());
    CHECK_FALSE(strict.signal.is_stop);
    CHECK(strict.protocol_warning);

    const auto lenient = parse_score_line(turn, StopPolicy::Lenient);
    REQUIRE(lenient.ok());
    CHECK(lenient.signal.is_stop);
    CHECK(lenient.protocol_warning);
}

TEST_CASE("critique never contains the score tag") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        std::string message = testsupport::random_text(rng, 1, 40);
        message += "\n";
        message += format_score_line(i % 2 == 0 ? HallucinationScore::Valid
                                                : HallucinationScore::Hallucinated);
        if (i % 3 == 0) message += "\n" + testsupport::random_text(rng, 1, 8);
        const auto parsed = parse_score_line(message);
        REQUIRE(parsed.ok());
        CHECK(parsed.signal.critique.find(kScoreTag) == std::string::npos);
    }
}

TEST_CASE("inline score tag inside a line is rejected, not leaked") {
    const auto parsed = parse_score_line("as noted [SCORE] should not appear\n[SCORE] hallucination_detect=1");
    CHECK(parsed.error == ScoreParseError::MultipleScoreLines);
}

TEST_CASE("boxed answer: plain and nested") {
    const auto plain = extract_boxed_answer("<answer>\\boxed{12}</answer>");
    CHECK(plain.well_formed);
    CHECK(plain.boxed_value == "12");

    const auto nested = extract_boxed_answer("<answer>\\boxed{\\frac{1}{2}}</answer>");
    CHECK(nested.well_formed);
    CHECK(nested.boxed_value == "\\frac{1}{2}");
}

TEST_CASE("boxed answer: missing box, empty input, missing tags") {
    const auto no_box = extract_boxed_answer("<answer>B</answer>");
    CHECK_FALSE(no_box.well_formed);
    CHECK_FALSE(no_box.boxed_value.has_value());

    const auto empty = extract_boxed_answer("");
    CHECK_FALSE(empty.well_formed);
    CHECK_FALSE(empty.boxed_value.has_value());

    const auto outside = extract_boxed_answer("the result is \\boxed{12}, no tags");
    CHECK_FALSE(outside.well_formed);
    CHECK_FALSE(outside.boxed_value.has_value());
}

TEST_CASE("boxed answer: duplicate answer blocks, last wins without well-formedness") {
    const auto dup = extract_boxed_answer(
        "<answer>\\boxed{1}</answer> scratch that <answer>\\boxed{2}</answer>");
    CHECK_FALSE(dup.well_formed);
    CHECK(dup.boxed_value == "2");
}

TEST_CASE("boxed answer: duplicate boxes inside one block") {
    const auto dup = extract_boxed_answer("<answer>\\boxed{1} or \\boxed{2}</answer>");
    CHECK_FALSE(dup.well_formed);
    CHECK(dup.boxed_value == "2");
}

TEST_CASE("boxed answer: unbalanced braces never crash") {
    const auto broken = extract_boxed_answer("<answer>\\boxed{\\frac{1}{2}</answer>");
    CHECK_FALSE(broken.well_formed);
    CHECK_FALSE(broken.boxed_value.has_value());
}

TEST_CASE("boxed answer is total over arbitrary bytes") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(0, 200);
    std::uniform_int_distribution<int> byte(1, 255);
    for (int i = 0; i < 500; ++i) {
        std::string junk;
        const int n = len(rng);
        for (int k = 0; k < n; ++k) junk.push_back(static_cast<char>(byte(rng)));
        CHECK_NOTHROW(extract_boxed_answer(junk));
    }
}

TEST_CASE("prose around the answer block does not spoil well-formedness") {
    const auto a = extract_boxed_answer("Therefore the result follows.\n<answer>\\boxed{A}</answer>");
    CHECK(a.well_formed);
    CHECK(a.boxed_value == "A");
    CHECK_FALSE(is_pure_final_answer("Therefore.\n<answer>\\boxed{A}</answer>"));
    CHECK(is_pure_final_answer("  <answer>\\boxed{A}</answer>\n"));
}

TEST_CASE("think blocks are stripped") {
    CHECK(strip_think_blocks("<think>x</think>keep<think>y</think>") == "keep");
    CHECK(strip_think_blocks("<think>unclosed stays") == "<think>unclosed stays");
}

TEST_CASE("answer equivalence") {
    FinalAnswer a;
    a.boxed_value = "12";
    CHECK(answers_equivalent(a, "12"));
    a.boxed_value = "D";
    CHECK(answers_equivalent(a, "d"));
    a.boxed_value = "12.0";
    CHECK(answers_equivalent(a, "12"));
    a.boxed_value = "12.0001";
    CHECK_FALSE(answers_equivalent(a, "12"));
    a.boxed_value = "12.000000000001";  // inside the 1e-9 relative band
    CHECK(answers_equivalent(a, "12"));
    a.boxed_value = "AB";
    CHECK_FALSE(answers_equivalent(a, "ab"));
    a.boxed_value.reset();
    CHECK_FALSE(answers_equivalent(a, "12"));
}

TEST_CASE("sharegpt round-trip over random trajectories") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        auto t = testsupport::random_trajectory(rng);
        const std::string line = serialize_sharegpt(t, "system prompt under test");
        const auto back = parse_sharegpt(line);

        // Gold answers and token tallies are not serialized by design.
        CHECK(back.task.id == t.task.id);
        CHECK(back.task.query == t.task.query);
        CHECK(back.task.hint == t.task.hint);
        CHECK(back.task.images == t.task.images);
        REQUIRE(back.steps.size() == t.steps.size());
        for (std::size_t s = 0; s < t.steps.size(); ++s) {
            CHECK(back.steps[s].output == t.steps[s].output);
            REQUIRE(back.steps[s].signal.has_value());
            CHECK(*back.steps[s].signal == *t.steps[s].signal);
        }
    }
}

TEST_CASE("sharegpt emits one system plus alternating human/gpt") {
    std::mt19937_64 rng(29);
    GuidedTrajectory t;
    t.task.id = "median-shape";
    t.task.query = "sample query";
    for (int i = 0; i < 10; ++i) {
        TrajectoryStep step;
        step.output = testsupport::random_text(rng, 2, 20);
        step.signal = GuidanceSignal{"fine", HallucinationScore::Valid, i == 9};
        if (i == 9) step.signal->critique = std::string(kStopToken);
        t.steps.push_back(std::move(step));
    }

    const std::string line = serialize_sharegpt(t, "sys");
    // 1 system + 10 human + 10 gpt = 21 messages, the corpus-median shape.
    std::size_t humans = 0, gpts = 0, systems = 0, pos = 0;
    for (std::string_view needle : {"\"from\":\"system\"", "\"from\":\"human\"", "\"from\":\"gpt\""}) {
        pos = 0;
        std::size_t count = 0;
        while ((pos = line.find(needle, pos)) != std::string::npos) {
            ++count;
            pos += needle.size();
        }
        if (needle.find("system") != std::string_view::npos) systems = count;
        else if (needle.find("human") != std::string_view::npos) humans = count;
        else gpts = count;
    }
    CHECK(systems == 1);
    CHECK(humans == 10);
    CHECK(gpts == 10);
    CHECK(systems + humans + gpts == 21);
}

TEST_CASE("sharegpt rejects empty and malformed input") {
    GuidedTrajectory empty;
    CHECK_THROWS_AS(serialize_sharegpt(empty, "sys"), ProtocolError);
    CHECK_THROWS_AS(parse_sharegpt("{\"conversations\": []}"), ProtocolError);
    CHECK_THROWS_AS(parse_sharegpt("not json"), ProtocolError);
    // Broken role order: two humans in a row.
    CHECK_THROWS_AS(
        parse_sharegpt(R"({"id":"x","query":"q","conversations":[)"
                       R"({"from":"system","value":"s"},)"
                       R"({"from":"human","value":"Problem:\nq\n\na"},)"
                       R"({"from":"human","value":"b"}]})"),
        ProtocolError);
}

TEST_CASE("all case transcripts parse with the documented rules") {
    for (const auto& dialogue : testsupport::case_dialogues()) {
        CAPTURE(dialogue.name);
        REQUIRE(dialogue.turns.size() == dialogue.expected_scores.size());
        int n_fail = 0;
        for (std::size_t i = 0; i < dialogue.turns.size(); ++i) {
            const auto parsed =
                parse_score_line(dialogue.turns[i].verifier, StopPolicy::Lenient);
            REQUIRE_MESSAGE(parsed.ok(), dialogue.name << " turn " << i);
            const int score =
                parsed.signal.hallucination_detect == HallucinationScore::Valid ? 1 : 0;
            CHECK(score == dialogue.expected_scores[i]);
            if (score == 0) ++n_fail;
            const bool is_last = i + 1 == dialogue.turns.size();
            CHECK(parsed.signal.is_stop == is_last);
        }
        CHECK(n_fail == dialogue.expected_n_fail);

        const auto answer = extract_boxed_answer(dialogue.turns.back().solver);
        if (dialogue.expected_boxed.empty()) {
            CHECK_FALSE(answer.boxed_value.has_value());
        } else {
            REQUIRE(answer.boxed_value.has_value());
            CHECK(*answer.boxed_value == dialogue.expected_boxed);
            CHECK(answers_equivalent(answer, dialogue.task.gold_answer) ==
                  dialogue.expected_accuracy);
        }
    }
}

TEST_CASE("clean-stop transcripts stop under the strict policy") {
    for (const auto& dialogue : testsupport::case_dialogues()) {
        CAPTURE(dialogue.name);
        const auto strict =
            parse_score_line(dialogue.turns.back().verifier, StopPolicy::Strict);
        REQUIRE(strict.ok());
        CHECK(strict.signal.is_stop == dialogue.clean_stop);
    }
}

TEST_SUITE_END();
