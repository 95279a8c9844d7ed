#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qcomb/io.hpp"
#include "qcomb/paper_example.hpp"
#include "qcomb/samplers.hpp"

using namespace qcomb;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qcomb_test_" + name)).string();
}

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(OperatorFile, CombRoundTripIsBitExact) {
  const auto inst = build_example(2);
  const std::string path = temp_path("c0.json");
  save_operator_file(path, comb_file(inst.c0, "C0 d=2"));
  const OperatorFile f = load_operator_file(path);
  EXPECT_EQ(f.kind, FileKind::comb);
  EXPECT_EQ(f.metadata, "C0 d=2");
  EXPECT_EQ(f.op.labels(), inst.c0.choi().labels());
  EXPECT_EQ(f.op.dims(), inst.c0.choi().dims());
  EXPECT_TRUE(f.op.matrix() == inst.c0.choi().matrix());
  // Saving again reproduces the same text.
  EXPECT_EQ(dump(f), dump(comb_file(inst.c0, "C0 d=2")));
  std::filesystem::remove(path);
}

TEST(OperatorFile, RandomEntriesRoundTrip) {
  Rng rng(81);
  const ComplexMatrix m = ginibre(3, 2, rng);
  const OperatorFile back = parse(dump(matrix_file(m)));
  EXPECT_TRUE(back.matrix == m);
}

TEST(OperatorFile, TesterAndChannelRoundTrip) {
  Rng rng(82);
  const Tester t = tester_from_circuit(random_tester_circuit({2, 2, 2, 2}, rng));
  const OperatorFile ft = parse(dump(tester_file(t)));
  ASSERT_EQ(ft.tester.elements.size(), t.elements.size());
  ASSERT_EQ(ft.tester.chain.size(), t.chain.size());
  for (std::size_t i = 0; i < t.elements.size(); ++i) EXPECT_TRUE(ft.tester.elements[i].matrix() == t.elements[i].matrix());
  EXPECT_TRUE(validate_tester(ft.tester).valid);

  OperatorFile fc;
  fc.kind = FileKind::channel;
  fc.channel = random_channel(2, 3, 2, rng);
  const OperatorFile back = parse(dump(fc));
  ASSERT_EQ(back.channel.kraus().size(), 2u);
  EXPECT_TRUE(back.channel.kraus()[1] == fc.channel.kraus()[1]);
  const MemoryChannel mc = memory_channel_of(back);
  EXPECT_TRUE(validate_comb(mc).valid);
}

TEST(OperatorFile, LabelsAreExplicit) {
  // Same data with the factor order swapped in the file.
  const std::string text = R"({"kind": "choi", "labels": [1, 0], "dims": {"0": 2, "1": 3},
    "data": [[[1,0],[0,0],[0,0],[0,0],[0,0],[0,0]],
             [[0,0],[1,0],[0,0],[0,0],[0,0],[0,0]],
             [[0,0],[0,0],[1,0],[0,0],[0,0],[0,0]],
             [[0,0],[0,0],[0,0],[1,0],[0,0],[0,0]],
             [[0,0],[0,0],[0,0],[0,0],[1,0],[0,0]],
             [[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]]})";
  const OperatorFile f = parse(text);
  EXPECT_EQ(f.op.labels(), (std::vector<Label>{1, 0}));
  EXPECT_EQ(f.op.dim(1), 3u);
  const MemoryChannel mc = memory_channel_of(f);
  EXPECT_EQ(mc.dims(), (std::vector<std::size_t>{2, 3}));
}

TEST(OperatorFile, MalformedDimsNameTheLabel) {
  const std::string missing = R"({"kind": "comb", "labels": [0, 1], "dims": {"0": 2},
    "data": [[[1,0],[0,0]],[[0,0],[1,0]]]})";
  EXPECT_NE(message_of(missing).find("label 1"), std::string::npos) << message_of(missing);
  const std::string negative = R"({"kind": "comb", "labels": [0, 7], "dims": {"0": 2, "7": -1},
    "data": [[[1,0],[0,0]],[[0,0],[1,0]]]})";
  EXPECT_NE(message_of(negative).find("label 7"), std::string::npos) << message_of(negative);
  const std::string extra = R"({"kind": "comb", "labels": [0], "dims": {"0": 2, "5": 2},
    "data": [[[1,0],[0,0]],[[0,0],[1,0]]]})";
  EXPECT_NE(message_of(extra).find("label 5"), std::string::npos) << message_of(extra);
}

TEST(OperatorFile, ShapeMismatchIsReported) {
  const std::string text = R"({"kind": "comb", "labels": [0, 1], "dims": {"0": 2, "1": 3},
    "data": [[[1,0],[0,0]],[[0,0],[1,0]]]})";
  const std::string msg = message_of(text);
  EXPECT_NE(msg.find("multiply to 6"), std::string::npos) << msg;
  const std::string ragged = R"({"kind": "matrix", "data": [[[1,0],[0,0]],[[0,0]]]})";
  EXPECT_NE(message_of(ragged).find("data/1"), std::string::npos) << message_of(ragged);
}

TEST(OperatorFile, TesterMissingChainListsRequiredFields) {
  const std::string text = R"({"kind": "tester", "uses": 1, "elements": []})";
  const std::string msg = message_of(text);
  EXPECT_NE(msg.find("chain"), std::string::npos) << msg;
  EXPECT_NE(msg.find("uses, elements, chain"), std::string::npos) << msg;
}

TEST(OperatorFile, RejectsNonPositiveComb) {
  const std::string text = R"({"kind": "comb", "labels": [0, 1], "dims": {"0": 1, "1": 2},
    "data": [[[1,0],[0,0]],[[0,0],[-0.5,0]]]})";
  EXPECT_NE(message_of(text).find("positive semidefinite"), std::string::npos) << message_of(text);
}

TEST(OperatorFile, ParseAndIoErrors) {
  EXPECT_NE(message_of("{not json").find("parse"), std::string::npos) << message_of("{not json");
  EXPECT_NE(message_of(R"({"kind": "bogus"})").find("bogus"), std::string::npos);
  EXPECT_THROW(load_operator_file(temp_path("does_not_exist.json")), FormatError);
}
