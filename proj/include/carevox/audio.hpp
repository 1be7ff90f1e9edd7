#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "carevox/common.hpp"

namespace carevox {

struct UnsupportedFormat final : Error { using Error::Error; };
struct CorruptHeader final : Error { using Error::Error; };
struct OutOfRange final : Error { using Error::Error; };
struct InvalidParams final : Error { using Error::Error; };
struct EmptyInput final : Error { using Error::Error; };
struct SampleRateMismatch final : Error { using Error::Error; };

// Mono audio, samples in [-1, 1].
struct AudioBuffer {
    std::vector<float> samples;
    int sample_rate_hz = 16000;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

// Sample index for time t, round-half-away-from-zero. Fixed once so clip
// assembly is bit-reproducible.
inline std::int64_t sample_index(double t, int rate) {
    return std::llround(t * static_cast<double>(rate));
}

// ---------------------------------------------------------------------------
// WAV (RIFF) decode/encode: PCM 16-bit and IEEE float32, any channel count in,
// mono PCM 16-bit out. Multi-channel input is downmixed by channel mean.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
}

}  // namespace detail

inline AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes) {
    using namespace detail;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw CorruptHeader("not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* hdr = bytes.data() + pos;
        std::uint32_t chunk_len = read_u32(hdr + 4);
        std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size()) throw CorruptHeader("chunk overruns file");
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw CorruptHeader("fmt chunk too short");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1);  // chunks are word-aligned
    }
    if (!have_fmt || data == nullptr) throw CorruptHeader("missing fmt or data chunk");
    if (channels == 0 || rate == 0) throw CorruptHeader("bad fmt fields");

    bool pcm16 = format == 1 && bits == 16;
    bool float32 = format == 3 && bits == 32;
    if (!pcm16 && !float32)
        throw UnsupportedFormat("only PCM16 and float32 WAV supported (format=" +
                                std::to_string(format) + ", bits=" + std::to_string(bits) + ")");

    std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    std::size_t frame_bytes = bytes_per_sample * channels;
    std::size_t frames = data_len / frame_bytes;

    AudioBuffer out;
    out.sample_rate_hz = static_cast<int>(rate);
    out.samples.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::uint8_t* p = data + f * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                std::int16_t v = static_cast<std::int16_t>(read_u16(p));
                acc += static_cast<double>(v) / 32768.0;
            } else {
                float v;
                std::memcpy(&v, p, 4);
                acc += v;
            }
        }
        out.samples[f] = static_cast<float>(acc / channels);
    }
    return out;
}

// Mono PCM16 at the buffer's native rate.
inline std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio) {
    using namespace detail;
    std::vector<std::uint8_t> out;
    std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
    out.reserve(44 + data_len);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_len);
    for (float s : audio.samples) {
        double clamped = std::clamp(static_cast<double>(s), -1.0, 1.0);
        std::int16_t v = static_cast<std::int16_t>(std::llround(clamped * 32767.0));
        put_u16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

inline AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open wav file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_wav(bytes);
}

inline void write_wav(const std::string& path, const AudioBuffer& audio) {
    auto bytes = encode_wav(audio);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write wav file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// Slicing, chunk planning, gapped concatenation, truncation
// ---------------------------------------------------------------------------

inline AudioBuffer slice(const AudioBuffer& audio, double start_s, double end_s) {
    const double dur = audio.duration_s();
    if (!(start_s >= 0.0 && start_s < end_s && end_s <= dur + 1e-9))
        throw OutOfRange("slice bounds [" + std::to_string(start_s) + ", " + std::to_string(end_s) +
                         ") outside [0, " + std::to_string(dur) + "]");
    std::int64_t i0 = sample_index(start_s, audio.sample_rate_hz);
    std::int64_t i1 = sample_index(end_s, audio.sample_rate_hz);
    i0 = std::clamp<std::int64_t>(i0, 0, static_cast<std::int64_t>(audio.samples.size()));
    i1 = std::clamp<std::int64_t>(i1, i0, static_cast<std::int64_t>(audio.samples.size()));
    AudioBuffer out;
    out.sample_rate_hz = audio.sample_rate_hz;
    out.samples.assign(audio.samples.begin() + i0, audio.samples.begin() + i1);
    return out;
}

struct ChunkSpan {
    double start_s = 0.0;
    double end_s = 0.0;
    bool operator==(const ChunkSpan&) const = default;
};

// Fixed-stride plan: starts at 0, stride = chunk_s - overlap_s, final chunk
// ends exactly at duration_s. A recording shorter than chunk_s is one chunk.
inline std::vector<ChunkSpan> chunk_plan(double duration_s, double chunk_s = 250.0,
                                         double overlap_s = 5.0) {
    if (!(overlap_s < chunk_s) || chunk_s <= 0.0 || overlap_s < 0.0)
        throw InvalidParams("need 0 <= overlap_s < chunk_s");
    if (duration_s <= 0.0) throw InvalidParams("duration_s must be positive");
    std::vector<ChunkSpan> plan;
    const double stride = chunk_s - overlap_s;
    double start = 0.0;
    while (true) {
        if (start + chunk_s >= duration_s) {
            plan.push_back({start, duration_s});
            break;
        }
        plan.push_back({start, start + chunk_s});
        start += stride;
    }
    return plan;
}

inline AudioBuffer concat_with_silence(const std::vector<AudioBuffer>& segments,
                                       double gap_s = 0.5) {
    if (segments.empty()) throw EmptyInput("no segments to concatenate");
    const int rate = segments.front().sample_rate_hz;
    std::size_t total = 0;
    for (const auto& seg : segments) {
        if (seg.sample_rate_hz != rate)
            throw SampleRateMismatch("segment rates " + std::to_string(rate) + " vs " +
                                     std::to_string(seg.sample_rate_hz));
        total += seg.samples.size();
    }
    const std::size_t gap_samples = static_cast<std::size_t>(sample_index(gap_s, rate));
    total += gap_samples * (segments.size() - 1);

    AudioBuffer out;
    out.sample_rate_hz = rate;
    out.samples.reserve(total);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) out.samples.insert(out.samples.end(), gap_samples, 0.0f);
        out.samples.insert(out.samples.end(), segments[i].samples.begin(),
                           segments[i].samples.end());
    }
    return out;
}

inline AudioBuffer truncate(const AudioBuffer& audio, double max_s = 30.0) {
    if (max_s <= 0.0) throw InvalidParams("max_s must be positive");
    const std::size_t cap = static_cast<std::size_t>(sample_index(max_s, audio.sample_rate_hz));
    if (audio.samples.size() <= cap) return audio;
    AudioBuffer out;
    out.sample_rate_hz = audio.sample_rate_hz;
    out.samples.assign(audio.samples.begin(), audio.samples.begin() + static_cast<std::ptrdiff_t>(cap));
    return out;
}

}  // namespace carevox
