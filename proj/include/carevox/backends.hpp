#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "carevox/common.hpp"

namespace carevox {

struct BackendUnavailable final : Error { using Error::Error; };
struct Exhausted final : Error { using Error::Error; };

struct NonTransient final : Error {
    NonTransient(int status, const std::string& msg) : Error(msg), status(status) {}
    int status;
};

enum class BackendKind {
    asr,
    diarizer,
    speaker_embedder,
    enhancer,
    chat_llm,
    audio_lm,
    text_embedder,
};

inline std::string to_string(BackendKind k) {
    switch (k) {
        case BackendKind::asr: return "asr";
        case BackendKind::diarizer: return "diarizer";
        case BackendKind::speaker_embedder: return "speaker_embedder";
        case BackendKind::enhancer: return "enhancer";
        case BackendKind::chat_llm: return "chat_llm";
        case BackendKind::audio_lm: return "audio_lm";
        default: return "text_embedder";
    }
}

struct BackendConfig {
    BackendKind kind = BackendKind::chat_llm;
    std::string endpoint;      // e.g. http://localhost:8081
    std::string model_id;
    std::string api_key_env;   // env var NAME; keys never live in files
    double timeout_s = 60.0;
    int max_retries = 2;       // retries after the first attempt
    int max_in_flight = 4;
    double backoff_base_s = 0.05;

    bool valid() const { return timeout_s > 0.0 && max_retries >= 0 && max_in_flight >= 1; }
};

// ---------------------------------------------------------------------------
// Backend interfaces. All calls are idempotent reads by contract, so a retry
// never duplicates side effects.
// ---------------------------------------------------------------------------

struct AsrWord {
    std::string text;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct DiarSegment {
    std::string label;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

class AsrBackend {
  public:
    virtual ~AsrBackend() = default;
    virtual std::vector<AsrWord> transcribe(const std::vector<std::uint8_t>& wav) = 0;
};

class DiarizerBackend {
  public:
    virtual ~DiarizerBackend() = default;
    virtual std::vector<DiarSegment> diarize(const std::vector<std::uint8_t>& wav,
                                             int max_speakers) = 0;
};

class SpeakerEmbedderBackend {
  public:
    virtual ~SpeakerEmbedderBackend() = default;
    virtual int dimension() = 0;
    virtual std::vector<double> embed(const std::vector<std::uint8_t>& wav) = 0;
};

class EnhancerBackend {
  public:
    virtual ~EnhancerBackend() = default;
    virtual std::vector<std::uint8_t> enhance(const std::vector<std::uint8_t>& wav) = 0;
};

class ChatLlmBackend {
  public:
    virtual ~ChatLlmBackend() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
    virtual std::string model_id() const = 0;
};

class AudioLmBackend {
  public:
    virtual ~AudioLmBackend() = default;
    virtual std::string query(const std::vector<std::uint8_t>& wav,
                              const std::string& instruction) = 0;
};

class TextEmbedderBackend {
  public:
    virtual ~TextEmbedderBackend() = default;
    virtual int dimension() = 0;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

// ---------------------------------------------------------------------------
// Retry with exponential backoff + jitter
// ---------------------------------------------------------------------------

struct HttpResponse {
    int status = 0;  // 0 = transport-level failure
    std::string body;
};

inline bool is_transient_status(int status) {
    return status == 0 || status == 408 || status == 429 || (status >= 500 && status < 600);
}

// attempt() performs one request and returns HttpResponse; a thrown exception
// counts as a transport failure. Transient failures (timeouts, 429, 5xx) are
// retried up to cfg.max_retries with exponential backoff and jitter;
// non-transient statuses surface immediately.
template <typename Fn>
HttpResponse call_with_retry(const BackendConfig& cfg, Fn&& attempt) {
    thread_local std::mt19937_64 jitter_rng(
        std::random_device{}() ^
        static_cast<std::uint64_t>(
            std::chrono::steady_clock::now().time_since_epoch().count()));
    std::string last_error;
    for (int i = 0; i <= cfg.max_retries; ++i) {
        HttpResponse resp;
        bool threw = false;
        try {
            resp = attempt();
        } catch (const std::exception& e) {
            threw = true;
            last_error = e.what();
        }
        if (!threw) {
            if (resp.status >= 200 && resp.status < 300) return resp;
            if (!is_transient_status(resp.status))
                throw NonTransient(resp.status,
                                   "backend returned status " + std::to_string(resp.status));
            last_error = "status " + std::to_string(resp.status);
        }
        if (i < cfg.max_retries) {
            double base = cfg.backoff_base_s * static_cast<double>(1 << i);
            std::uniform_real_distribution<double> jitter(0.0, base);
            double sleep_s = base + jitter(jitter_rng);
            std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));
        }
    }
    throw Exhausted("retries exhausted after " + std::to_string(cfg.max_retries + 1) +
                    " attempts; last error: " + last_error);
}

// Fair per-backend concurrency cap.
class InFlightGate {
  public:
    explicit InFlightGate(int cap) : cap_(cap < 1 ? 1 : cap) {}
    void acquire() {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return active_ < cap_; });
        ++active_;
    }
    void release() {
        {
            std::lock_guard lk(m_);
            --active_;
        }
        cv_.notify_one();
    }

  private:
    int cap_;
    int active_ = 0;
    std::mutex m_;
    std::condition_variable cv_;
};

class GateGuard {
  public:
    explicit GateGuard(InFlightGate& gate) : gate_(gate) { gate_.acquire(); }
    ~GateGuard() { gate_.release(); }
    GateGuard(const GateGuard&) = delete;
    GateGuard& operator=(const GateGuard&) = delete;

  private:
    InFlightGate& gate_;
};

namespace detail {

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
    static const char* alphabet =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= data.size()) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out.push_back(alphabet[v & 63]);
        i += 3;
    }
    if (i + 1 == data.size()) {
        std::uint32_t v = data[i] << 16;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == data.size()) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(alphabet[(v >> 6) & 63]);
        out += "=";
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// HTTP clients. Request/response bodies per kind are documented in the README;
// audio travels as WAV bytes, text as UTF-8 JSON. API keys come only from the
// environment variable named in the config.
// ---------------------------------------------------------------------------

class HttpClientBase {
  public:
    explicit HttpClientBase(BackendConfig cfg)
        : cfg_(std::move(cfg)), gate_(cfg_.max_in_flight) {
        if (!cfg_.valid()) throw Error("invalid backend config for " + to_string(cfg_.kind));
        if (cfg_.endpoint.empty())
            throw BackendUnavailable("no endpoint configured for " + to_string(cfg_.kind));
    }

    const BackendConfig& config() const { return cfg_; }

  protected:
    httplib::Client make_client() const {
        httplib::Client cli(cfg_.endpoint);
        auto timeout = std::chrono::duration<double>(cfg_.timeout_s);
        cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        cli.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        cli.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
        return cli;
    }

    httplib::Headers auth_headers() const {
        httplib::Headers headers;
        if (!cfg_.api_key_env.empty()) {
            if (const char* key = std::getenv(cfg_.api_key_env.c_str()))
                headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        return headers;
    }

    HttpResponse post_with_retry(const std::string& path, const std::string& body,
                                 const std::string& content_type) {
        GateGuard guard(gate_);
        try {
            return call_with_retry(cfg_, [&] {
                auto cli = make_client();
                auto res = cli.Post(path, auth_headers(), body, content_type);
                if (!res) return HttpResponse{0, httplib::to_string(res.error())};
                return HttpResponse{res->status, res->body};
            });
        } catch (const NonTransient& e) {
            throw BackendUnavailable(to_string(cfg_.kind) + ": " + e.what());
        } catch (const Exhausted& e) {
            throw BackendUnavailable(to_string(cfg_.kind) + ": " + e.what());
        }
    }

    HttpResponse get_with_retry(const std::string& path) {
        GateGuard guard(gate_);
        try {
            return call_with_retry(cfg_, [&] {
                auto cli = make_client();
                auto res = cli.Get(path, auth_headers());
                if (!res) return HttpResponse{0, httplib::to_string(res.error())};
                return HttpResponse{res->status, res->body};
            });
        } catch (const NonTransient& e) {
            throw BackendUnavailable(to_string(cfg_.kind) + ": " + e.what());
        } catch (const Exhausted& e) {
            throw BackendUnavailable(to_string(cfg_.kind) + ": " + e.what());
        }
    }

    BackendConfig cfg_;
    InFlightGate gate_;
};

class HttpAsr final : public AsrBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    std::vector<AsrWord> transcribe(const std::vector<std::uint8_t>& wav) override {
        auto resp = post_with_retry("/transcribe",
                                    std::string(wav.begin(), wav.end()), "audio/wav");
        auto j = nlohmann::json::parse(resp.body);
        std::vector<AsrWord> words;
        for (const auto& w : j.at("words"))
            words.push_back({w.at("text").get<std::string>(), w.at("start_s").get<double>(),
                             w.at("end_s").get<double>()});
        return words;
    }
};

class HttpDiarizer final : public DiarizerBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    std::vector<DiarSegment> diarize(const std::vector<std::uint8_t>& wav,
                                     int max_speakers) override {
        auto resp = post_with_retry("/diarize?max_speakers=" + std::to_string(max_speakers),
                                    std::string(wav.begin(), wav.end()), "audio/wav");
        auto j = nlohmann::json::parse(resp.body);
        std::vector<DiarSegment> segs;
        for (const auto& s : j.at("segments"))
            segs.push_back({s.at("label").get<std::string>(), s.at("start_s").get<double>(),
                            s.at("end_s").get<double>()});
        return segs;
    }
};

class HttpSpeakerEmbedder final : public SpeakerEmbedderBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    int dimension() override {
        auto resp = get_with_retry("/capabilities");
        return nlohmann::json::parse(resp.body).at("dimension").get<int>();
    }
    std::vector<double> embed(const std::vector<std::uint8_t>& wav) override {
        auto resp = post_with_retry("/embed", std::string(wav.begin(), wav.end()), "audio/wav");
        return nlohmann::json::parse(resp.body).at("embedding").get<std::vector<double>>();
    }
};

class HttpEnhancer final : public EnhancerBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    std::vector<std::uint8_t> enhance(const std::vector<std::uint8_t>& wav) override {
        auto resp = post_with_retry("/enhance", std::string(wav.begin(), wav.end()), "audio/wav");
        return std::vector<std::uint8_t>(resp.body.begin(), resp.body.end());
    }
};

class HttpChatLlm final : public ChatLlmBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    std::string complete(const std::vector<ChatMessage>& messages) override {
        nlohmann::json req{{"model", cfg_.model_id}};
        auto& msgs = req["messages"] = nlohmann::json::array();
        for (const auto& m : messages)
            msgs.push_back({{"role", m.role}, {"content", m.content}});
        auto resp = post_with_retry("/v1/chat/completions", req.dump(), "application/json");
        auto j = nlohmann::json::parse(resp.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    std::string model_id() const override { return cfg_.model_id; }
};

class HttpAudioLm final : public AudioLmBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    std::string query(const std::vector<std::uint8_t>& wav,
                      const std::string& instruction) override {
        nlohmann::json req{{"model", cfg_.model_id},
                           {"instruction", instruction},
                           {"audio_wav_base64", detail::base64_encode(wav)}};
        auto resp = post_with_retry("/v1/audio/describe", req.dump(), "application/json");
        return nlohmann::json::parse(resp.body).at("text").get<std::string>();
    }
};

class HttpTextEmbedder final : public TextEmbedderBackend, public HttpClientBase {
  public:
    using HttpClientBase::HttpClientBase;
    int dimension() override {
        auto resp = get_with_retry("/capabilities");
        return nlohmann::json::parse(resp.body).at("dimension").get<int>();
    }
    std::vector<double> embed(const std::string& text) override {
        nlohmann::json req{{"model", cfg_.model_id}, {"input", text}};
        auto resp = post_with_retry("/embed", req.dump(), "application/json");
        return nlohmann::json::parse(resp.body).at("embedding").get<std::vector<double>>();
    }
};

}  // namespace carevox
