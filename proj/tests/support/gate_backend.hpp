#pragma once

#include <condition_variable>
#include <mutex>
#include <string>

#include "stagewise/gateway.hpp"

namespace stagewise::testing {

// Blocks inside the model call until released.
class GateBackend : public ChatBackend {
public:
    void release() {
        std::lock_guard l(mu_);
        open_ = true;
        cv_.notify_all();
    }
    void wait_entered() {
        std::unique_lock l(mu_);
        cv_.wait(l, [&] { return entered_; });
    }

private:
    std::string do_complete(const CompletionRequest&) override {
        std::unique_lock l(mu_);
        entered_ = true;
        cv_.notify_all();
        cv_.wait(l, [&] { return open_; });
        return "I hear you.";
    }
    std::mutex mu_;
    std::condition_variable cv_;
    bool entered_ = false, open_ = false;
};

}  // namespace stagewise::testing
