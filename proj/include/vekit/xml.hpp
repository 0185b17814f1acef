#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vekit/errors.hpp"

namespace vekit::xml {

struct ParseError : Error {
    int line;
    int column;
    ParseError(int line_, int column_, const std::string& msg)
        : Error("xml:" + std::to_string(line_) + ":" + std::to_string(column_) + ": " + msg),
          line(line_),
          column(column_) {}
};

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;  // document order
    std::vector<Element> children;
    int line = 0;
    int column = 0;

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes)
            if (k == key) return &v;
        return nullptr;
    }
};

namespace detail {

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    Element parse_document() {
        skip_prolog();
        if (eof()) fail("expected a root element");
        Element root = parse_element();
        skip_misc();
        if (!eof()) fail("content after root element");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, column_, msg); }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    char take() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        return c;
    }

    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        take();
    }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r' || peek() == '\n')) take();
    }

    void skip_until(std::string_view terminator) {
        while (!eof()) {
            if (starts_with(terminator)) {
                for (std::size_t i = 0; i < terminator.size(); ++i) take();
                return;
            }
            take();
        }
        fail("unterminated markup, expected '" + std::string(terminator) + "'");
    }

    // XML declaration, comments, doctype, processing instructions.
    void skip_prolog() {
        for (;;) {
            skip_ws();
            if (starts_with("<?")) {
                skip_until("?>");
            } else if (starts_with("<!--")) {
                skip_until("-->");
            } else if (starts_with("<!")) {
                skip_doctype();
            } else {
                return;
            }
        }
    }

    void skip_misc() {
        for (;;) {
            skip_ws();
            if (starts_with("<!--")) {
                skip_until("-->");
            } else if (starts_with("<?")) {
                skip_until("?>");
            } else {
                return;
            }
        }
    }

    void skip_doctype() {
        take();  // '<'
        take();  // '!'
        int depth = 1;
        while (!eof() && depth > 0) {
            char c = take();
            if (c == '<') ++depth;
            if (c == '>') --depth;
            if (c == '[') {
                // internal subset: skip to matching ']'
                int brackets = 1;
                while (!eof() && brackets > 0) {
                    char b = take();
                    if (b == '[') ++brackets;
                    if (b == ']') --brackets;
                }
            }
        }
        if (depth != 0) fail("unterminated doctype");
    }

    static bool is_name_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
    }

    static bool is_name_char(char c) {
        return is_name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
    }

    std::string parse_name() {
        if (eof() || !is_name_start(peek())) fail("expected a name");
        std::string name;
        while (!eof() && is_name_char(peek())) name.push_back(take());
        return name;
    }

    std::string parse_attr_value() {
        if (eof() || (peek() != '"' && peek() != '\'')) fail("expected a quoted attribute value");
        char quote = take();
        std::string value;
        for (;;) {
            if (eof()) fail("unterminated attribute value");
            char c = take();
            if (c == quote) break;
            if (c == '<') fail("'<' in attribute value");
            if (c == '&') {
                value += parse_entity();
            } else {
                value.push_back(c);
            }
        }
        return value;
    }

    std::string parse_entity() {
        std::string ent;
        while (!eof() && peek() != ';') {
            ent.push_back(take());
            if (ent.size() > 8) fail("bad entity reference");
        }
        if (eof()) fail("unterminated entity reference");
        take();  // ';'
        if (ent == "amp") return "&";
        if (ent == "lt") return "<";
        if (ent == "gt") return ">";
        if (ent == "quot") return "\"";
        if (ent == "apos") return "'";
        if (!ent.empty() && ent[0] == '#') {
            long code = 0;
            bool hexfmt = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
            std::string digits = ent.substr(hexfmt ? 2 : 1);
            for (char d : digits) {
                int v;
                if (d >= '0' && d <= '9') v = d - '0';
                else if (hexfmt && d >= 'a' && d <= 'f') v = d - 'a' + 10;
                else if (hexfmt && d >= 'A' && d <= 'F') v = d - 'A' + 10;
                else fail("bad character reference");
                code = code * (hexfmt ? 16 : 10) + v;
            }
            if (code <= 0 || code > 0x10ffff) fail("character reference out of range");
            // encode UTF-8
            std::string out;
            if (code < 0x80) out.push_back(static_cast<char>(code));
            else if (code < 0x800) {
                out.push_back(static_cast<char>(0xc0 | (code >> 6)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3f)));
            } else if (code < 0x10000) {
                out.push_back(static_cast<char>(0xe0 | (code >> 12)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3f)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3f)));
            } else {
                out.push_back(static_cast<char>(0xf0 | (code >> 18)));
                out.push_back(static_cast<char>(0x80 | ((code >> 12) & 0x3f)));
                out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3f)));
                out.push_back(static_cast<char>(0x80 | (code & 0x3f)));
            }
            return out;
        }
        fail("unknown entity '&" + ent + ";'");
    }

    Element parse_element() {
        expect('<');
        Element el;
        el.line = line_;
        el.column = column_;
        el.name = parse_name();
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated element '" + el.name + "'");
            if (peek() == '/') {
                take();
                expect('>');
                return el;  // self-closing
            }
            if (peek() == '>') {
                take();
                parse_content(el);
                return el;
            }
            std::string key = parse_name();
            for (const auto& [k, v] : el.attributes)
                if (k == key) fail("duplicate attribute '" + key + "'");
            skip_ws();
            expect('=');
            skip_ws();
            el.attributes.emplace_back(std::move(key), parse_attr_value());
        }
    }

    void parse_content(Element& el) {
        for (;;) {
            if (eof()) fail("unterminated element '" + el.name + "'");
            char c = peek();
            if (c == '<') {
                if (starts_with("</")) {
                    take();
                    take();
                    std::string closing = parse_name();
                    if (closing != el.name)
                        fail("mismatched closing tag '" + closing + "' for '" + el.name + "'");
                    skip_ws();
                    expect('>');
                    return;
                }
                if (starts_with("<!--")) {
                    skip_until("-->");
                    continue;
                }
                if (starts_with("<?")) {
                    skip_until("?>");
                    continue;
                }
                el.children.push_back(parse_element());
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                take();
            } else {
                fail("unexpected text content in '" + el.name + "'");
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

inline void escape_into(std::string& out, std::string_view value) {
    for (char c : value) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
}

inline void write_element(std::string& out, const Element& el, int depth) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out.push_back('<');
    out += el.name;
    for (const auto& [k, v] : el.attributes) {
        out.push_back(' ');
        out += k;
        out += "=\"";
        escape_into(out, v);
        out.push_back('"');
    }
    if (el.children.empty()) {
        out += "/>\n";
        return;
    }
    out += ">\n";
    for (const Element& child : el.children) write_element(out, child, depth + 1);
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += "</";
    out += el.name;
    out += ">\n";
}

}  // namespace detail

inline Element parse(std::string_view text) { return detail::Reader(text).parse_document(); }

inline std::string write(const Element& root) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    detail::write_element(out, root, 0);
    return out;
}

}  // namespace vekit::xml
