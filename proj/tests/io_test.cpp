#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "adaptaa/config.hpp"
#include "adaptaa/image_io.hpp"
#include "adaptaa/report.hpp"
#include "adaptaa/t4f.hpp"

namespace adaptaa {
namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("adaptaa_io_" + name);
  std::filesystem::remove_all(p);
  return p;
}

TEST(T4f, ByteLayout) {
  const Tensor t(Shape{1, 1, 1, 2}, {1.0f, -2.0f});
  std::ostringstream os;
  write_t4f(os, t);
  const std::string b = os.str();
  ASSERT_EQ(b.size(), 4u + 16u + 8u);
  EXPECT_EQ(b.substr(0, 4), "T4F1");
  EXPECT_EQ(b[4], 1);  // n, little-endian
  EXPECT_EQ(b[16], 2);  // w
  // 1.0f = 0x3f800000, stored least significant byte first.
  EXPECT_EQ(static_cast<unsigned char>(b[20]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(b[23]), 0x3f);
  EXPECT_EQ(static_cast<unsigned char>(b[27]), 0xc0);
}

TEST(T4f, RoundTripIsBitExact) {
  std::vector<float> v{0.0f, -0.0f, 1e-42f, std::numeric_limits<float>::max(),
                       std::numeric_limits<float>::quiet_NaN(), 3.14159f};
  const Tensor t(Shape{1, 2, 3, 1}, v);
  std::stringstream ss;
  write_t4f(ss, t);
  const Tensor u = read_t4f(ss);
  ASSERT_EQ(u.shape(), t.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint32_t>(u[i]), std::bit_cast<std::uint32_t>(t[i]));
  }
}

TEST(T4f, RejectsBadInput) {
  std::istringstream bad_magic("T4F2aaaaaaaaaaaaaaaa");
  EXPECT_THROW(read_t4f(bad_magic), FormatError);
  std::ostringstream os;
  write_t4f(os, Tensor(Shape{1, 1, 2, 2}, 1.0f));
  std::istringstream truncated(os.str().substr(0, os.str().size() - 3));
  EXPECT_THROW(read_t4f(truncated), FormatError);
  EXPECT_THROW(load_t4f("/nonexistent/x.t4f"), FormatError);
}

TEST(Checkpoint, ManifestRoundTrip) {
  const auto dir = scratch("ck");
  Checkpoint ck;
  ck.put("a.weight", Tensor(Shape{2, 1, 3, 3}, 0.5f));
  ck.put_vector("a.bias", {1.0f, 2.0f});
  ck.save(dir);
  std::ifstream manifest(dir / "manifest.txt");
  std::string header;
  std::getline(manifest, header);
  EXPECT_EQ(header, "T4F-MANIFEST 1");
  const Checkpoint back = Checkpoint::load(dir);
  ASSERT_EQ(back.entries().size(), 2u);
  EXPECT_EQ(back.entries()[0].first, "a.weight");
  EXPECT_EQ(back.get("a.weight"), ck.get("a.weight"));
  EXPECT_EQ(back.get("a.bias").shape(), (Shape{1, 2, 1, 1}));
  EXPECT_EQ(back.get_vector("a.bias"), (std::vector<float>{1.0f, 2.0f}));
  EXPECT_THROW(back.get("missing"), FormatError);
  EXPECT_THROW(ck.put("bad name", Tensor()), FormatError);
  ck.put("a.bias", Tensor(Shape{1, 1, 1, 1}, 9.0f));
  EXPECT_EQ(ck.entries().size(), 2u);
  EXPECT_EQ(ck.get_vector("a.bias"), std::vector<float>{9.0f});
  std::filesystem::remove_all(dir);
}

TEST(Pnm, PlainAndBinaryRoundTrip) {
  for (auto enc : {PnmEncoding::kPlain, PnmEncoding::kBinary}) {
    for (int channels : {1, 3}) {
      for (int maxval : {255, 1023}) {
        Image img;
        img.width = 3;
        img.height = 2;
        img.channels = channels;
        img.maxval = maxval;
        img.encoding = enc;
        for (std::size_t i = 0; i < 6u * channels; ++i) {
          img.samples.push_back(static_cast<std::uint16_t>((i * 97) % (maxval + 1)));
        }
        std::stringstream ss;
        write_pnm(ss, img);
        const std::string text = ss.str();
        const char magic = channels == 1 ? (enc == PnmEncoding::kPlain ? '2' : '5')
                                         : (enc == PnmEncoding::kPlain ? '3' : '6');
        EXPECT_EQ(text[1], magic);
        const Image back = read_pnm(ss);
        EXPECT_EQ(back.samples, img.samples);
        EXPECT_EQ(back.channels, channels);
        EXPECT_EQ(back.maxval, maxval);
        EXPECT_EQ(back.encoding, enc);
        std::stringstream again;
        write_pnm(again, back);
        EXPECT_EQ(again.str(), text);
      }
    }
  }
}

TEST(Pnm, HeaderCommentsAndErrors) {
  std::istringstream with_comments("P2\n# made by hand\n2 1 # size\n9\n3 9\n");
  const Image img = read_pnm(with_comments);
  EXPECT_EQ(img.samples, (std::vector<std::uint16_t>{3, 9}));
  std::istringstream bad("P7\n1 1\n255\n0\n");
  EXPECT_THROW(read_pnm(bad), FormatError);
  std::istringstream over("P2\n1 1\n9\n10\n");
  EXPECT_THROW(read_pnm(over), FormatError);
  std::istringstream short_body("P5\n2 2\n255\nab");
  EXPECT_THROW(read_pnm(short_body), FormatError);
}

TEST(Pnm, TensorConversion) {
  Image img;
  img.width = 2;
  img.height = 1;
  img.channels = 3;
  img.samples = {0, 51, 255, 102, 204, 153};
  const Tensor t = image_to_tensor(img);
  EXPECT_EQ(t.shape(), (Shape{1, 3, 1, 2}));
  EXPECT_FLOAT_EQ(t(0, 1, 0, 0), 0.2f);
  EXPECT_FLOAT_EQ(t(0, 2, 0, 1), 0.6f);
  EXPECT_EQ(tensor_to_image(t).samples, img.samples);
  Tensor out_of_range(Shape{1, 1, 1, 2}, {-0.5f, 1.5f});
  EXPECT_EQ(tensor_to_image(out_of_range).samples, (std::vector<std::uint16_t>{0, 255}));
  EXPECT_THROW(tensor_to_image(Tensor(Shape{1, 2, 1, 1})), ShapeError);
}

TEST(Pnm, LabelMapsAndMasks) {
  const auto dir = scratch("labels");
  std::filesystem::create_directories(dir);
  LabelMap m(2, 3);
  m(0, 1) = 300;
  m(1, 2) = 7;
  write_label_map(dir / "m.pgm", m);
  EXPECT_EQ(read_label_map(dir / "m.pgm").ids(), m.ids());
  Mask mask(2, 2);
  mask.set(1, 0, true);
  write_mask(dir / "k.pgm", mask);
  EXPECT_EQ(read_mask(dir / "k.pgm").bits(), mask.bits());
  std::filesystem::remove_all(dir);
}

TEST(KeyValueConfig, ParseAndUsage) {
  auto cfg = KeyValueConfig::parse("# comment\nepochs = 4\n name=run one # trailing\nlist=a, b,c\n");
  EXPECT_EQ(cfg.get_int("epochs", 0), 4);
  EXPECT_EQ(cfg.get_string("name", ""), "run one");
  EXPECT_EQ(cfg.get_list("list", {}), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(cfg.get_double("lr", 0.5), 0.5);
  EXPECT_NO_THROW(cfg.check_all_used());
  cfg.set("typo", "1");
  EXPECT_THROW(cfg.check_all_used(), std::invalid_argument);
  EXPECT_THROW(KeyValueConfig::parse("novalue\n"), FormatError);
  EXPECT_THROW(KeyValueConfig::parse(" = 3\n"), FormatError);
  auto bad = KeyValueConfig::parse("epochs = four\n");
  EXPECT_THROW(bad.get_int("epochs", 0), std::invalid_argument);
  const auto again = KeyValueConfig::parse(cfg.to_text());
  EXPECT_EQ(again.get_string("name", ""), "run one");
}

TEST(MetricReport, TextAndJsonRoundTrip) {
  MetricReport r("demo");
  r.add("consistency", 0.75, 3, 100, 2);
  r.add("loss", std::numeric_limits<double>::quiet_NaN(), 3);
  r.add("accuracy", 1.0 / 3.0, 4);
  const std::string text = r.to_text();
  EXPECT_EQ(text.substr(0, 24), "# adaptaa report: demo\nm");
  EXPECT_NE(text.find("metric=consistency value=0.75 pairs_used=100 pairs_skipped=2 seed=3\n"),
            std::string::npos);
  const MetricReport back = MetricReport::parse(text);
  EXPECT_EQ(back.title(), "demo");
  ASSERT_EQ(back.entries().size(), 3u);
  EXPECT_EQ(back.entries()[0], r.entries()[0]);
  EXPECT_TRUE(std::isnan(back.get("loss").value));
  EXPECT_EQ(back.get("accuracy").value, 1.0 / 3.0);
  EXPECT_THROW(MetricReport::parse("metric=x value=1\n"), FormatError);
  EXPECT_THROW(r.get("missing"), std::out_of_range);

  const auto path = scratch("report") / "r.txt";
  r.save(path);
  EXPECT_EQ(MetricReport::load(path).entries().size(), 3u);
  std::filesystem::remove_all(path.parent_path());
}

}  // namespace
}  // namespace adaptaa
