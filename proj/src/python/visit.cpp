#include "tracescope/python/visit.hpp"

namespace tracescope::python {

    void walk_exprs(const expr& e, const std::function<void(const expr&)>& fn) {
        fn(e);
        for (const auto& c : e.items) walk_exprs(c, fn);
    }

    void walk_exprs(const stmt& s, const std::function<void(const expr&)>& fn) {
        for (const auto& d : s.decorators) walk_exprs(d, fn);
        for (const auto& t : s.targets) walk_exprs(t, fn);
        walk_exprs(s.value, fn);
        for (const auto& e : s.exprs) walk_exprs(e, fn);
        for (const auto* block : {&s.body, &s.orelse, &s.handlers, &s.finalbody}) {
            for (const auto& c : *block) walk_exprs(c, fn);
        }
    }

    void walk_stmts(const std::vector<stmt>& body, const std::function<void(const stmt&)>& fn) {
        for (const auto& s : body) {
            fn(s);
            walk_stmts(s.body, fn);
            walk_stmts(s.orelse, fn);
            walk_stmts(s.handlers, fn);
            walk_stmts(s.finalbody, fn);
        }
    }

    void collect_identifiers(const module& m, std::vector<std::string>& out) {
        walk_stmts(m.body, [&](const stmt& s) {
            if (!s.name.empty()) out.push_back(s.name);
            for (const auto& n : s.names) out.push_back(n);
            for (const auto& a : s.aliases) {
                if (!a.empty()) out.push_back(a);
            }
            walk_exprs(s, [&](const expr& e) {
                switch (e.kind) {
                    case expr_kind::name:
                    case expr_kind::attribute:
                    case expr_kind::keyword:
                    case expr_kind::param:
                        if (!e.text.empty()) out.push_back(e.text);
                        break;
                    default: break;
                }
            });
        });
    }

}  // namespace tracescope::python
