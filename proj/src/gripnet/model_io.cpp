#include "handover/gripnet/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace handover::gripnet {

namespace {

constexpr char kMagic[8] = {'H', 'O', 'V', 'A', 'E', 'L', 'S', '\0'};

template <class T>
void put(std::string& out, T value)
{
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <class T>
    T get(const char* what)
    {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
        if (pos_ + sizeof(U) > bytes_.size()) fail(ErrorKind::Format, std::string("model file truncated while reading ") + what);
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(U);
        return std::bit_cast<T>(bits);
    }

    std::size_t position() const { return pos_; }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t checksum(const char* data, std::size_t n)
{
    return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

}  // namespace

std::string serialize(const VaeLstmModel& model)
{
    std::string out(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kModelFormatVersion);
    for (int v : {kInputs, kHidden, kLatent, kSteps}) put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    put<std::uint64_t>(out, VaeLstmModel::kParameterCount);
    for (double m : model.norm.mean) put<double>(out, m);
    for (double s : model.norm.stddev) put<double>(out, s);
    for (double p : model.parameters()) put<double>(out, p);
    put<std::uint32_t>(out, checksum(out.data(), out.size()));
    return out;
}

VaeLstmModel deserialize(const std::string& bytes)
{
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        fail(ErrorKind::Format, "not a grip-release model file (bad magic)");
    const std::string body = bytes.substr(sizeof(kMagic));
    Reader r(body);
    const auto version = r.get<std::uint32_t>("version");
    if (version != kModelFormatVersion)
        fail(ErrorKind::Incompatible, "model format version " + std::to_string(version) + " is not supported (expected " +
                                          std::to_string(kModelFormatVersion) + ")");
    const int expected[4] = {kInputs, kHidden, kLatent, kSteps};
    const char* names[4] = {"input size", "hidden size", "latent size", "window length"};
    for (int i = 0; i < 4; ++i) {
        const auto v = r.get<std::uint32_t>(names[i]);
        if (v != static_cast<std::uint32_t>(expected[i]))
            fail(ErrorKind::Incompatible, std::string("model ") + names[i] + " " + std::to_string(v) + " differs from " + std::to_string(expected[i]));
    }
    const auto count = r.get<std::uint64_t>("parameter count");
    if (count != VaeLstmModel::kParameterCount)
        fail(ErrorKind::Incompatible, "model declares " + std::to_string(count) + " parameters, expected " +
                                          std::to_string(VaeLstmModel::kParameterCount));

    const std::size_t expected_size = sizeof(kMagic) + 4 + 16 + 8 + 8 * (6 + VaeLstmModel::kParameterCount) + 4;
    if (bytes.size() != expected_size)
        fail(ErrorKind::Format, "model file is " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string(expected_size));

    VaeLstmModel model;
    for (double& m : model.norm.mean) m = r.get<double>("normalization");
    for (double& s : model.norm.stddev) s = r.get<double>("normalization");
    std::vector<double> params(VaeLstmModel::kParameterCount);
    for (double& p : params) p = r.get<double>("parameters");
    const std::size_t covered = sizeof(kMagic) + r.position();
    const auto stored = r.get<std::uint32_t>("checksum");
    if (stored != checksum(bytes.data(), covered)) fail(ErrorKind::Format, "model checksum mismatch");

    for (double p : params)
        if (!std::isfinite(p)) fail(ErrorKind::Format, "model contains non-finite parameters");
    for (int c = 0; c < kInputs; ++c)
        if (!std::isfinite(model.norm.mean[c]) || !(model.norm.stddev[c] > 0.0))
            fail(ErrorKind::Format, "model normalization statistics are invalid");
    model.set_parameters(params);
    return model;
}

void save_model(const VaeLstmModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write model file " + path.string());
    const auto bytes = serialize(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "failed writing model file " + path.string());
}

VaeLstmModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open model file " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace handover::gripnet
