// Regenerates the UCI Connect-4 8-ply database: every legal position after
// eight plies where neither side has won and the side to move is not facing an
// immediate threat, labelled with the game-theoretic outcome for the first
// player (win / loss / draw).
//
// Bitboard negamax with alpha-beta, a shared transposition table, threat-based
// move ordering and a weak (sign-only) null-window solve.
//
//   c4gen stats                  print category counts of the 8-ply positions
//   c4gen solve [skip] [limit]   write UCI-format rows to stdout
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <unordered_map>
#include <unordered_set>
#include <vector>

typedef uint64_t u64;
static const int W = 7, H = 6;

static constexpr u64 bottom(int w, int h) { return w == 0 ? 0 : bottom(w - 1, h) | 1ULL << ((w - 1) * (h + 1)); }
static const u64 BOTTOM = bottom(W, H);
static const u64 BOARD = BOTTOM * ((1ULL << H) - 1);
static inline u64 top_mask_col(int c) { return 1ULL << (H - 1 + c * (H + 1)); }
static inline u64 bottom_mask_col(int c) { return 1ULL << (c * (H + 1)); }
static inline u64 column_mask(int c) { return ((1ULL << H) - 1) << (c * (H + 1)); }

static u64 winning_cells(u64 p, u64 mask) {
    u64 r = (p << 1) & (p << 2) & (p << 3);
    for (int s : {H + 1, H, H + 2}) {
        u64 t = (p << s) & (p << 2 * s);
        r |= t & (p << 3 * s);
        r |= t & (p >> s);
        t = (p >> s) & (p >> 2 * s);
        r |= t & (p << s);
        r |= t & (p >> 3 * s);
    }
    return r & (BOARD ^ mask);
}

static bool has_four(u64 p) {
    for (int s : {1, H + 1, H, H + 2}) {
        u64 m = p & (p >> s);
        if (m & (m >> 2 * s)) return true;
    }
    return false;
}

struct Position {
    u64 cur = 0, mask = 0;
    int moves = 0;
    bool can_play(int c) const { return (mask & top_mask_col(c)) == 0; }
    void play(u64 move) { cur ^= mask; mask |= move; moves++; }
    u64 col_move(int c) const { return (mask + bottom_mask_col(c)) & column_mask(c); }
    u64 possible() const { return (mask + BOTTOM) & BOARD; }
    u64 winning() const { return winning_cells(cur, mask); }
    u64 opp_winning() const { return winning_cells(cur ^ mask, mask); }
    bool can_win_next() const { return winning() & possible(); }
    u64 key() const { return cur + mask; }
    u64 non_losing() const {
        u64 pm = possible();
        u64 ow = opp_winning();
        u64 forced = pm & ow;
        if (forced) {
            if (forced & (forced - 1)) return 0;
            pm = forced;
        }
        return pm & ~(ow >> 1);
    }
    int move_score(u64 move) const { return __builtin_popcountll(winning_cells(cur | move, mask)); }
};

static const u64 TT_SIZE = 134217757ULL;  // prime, ~1.2 GB
static u64 *tt_key;
static int8_t *tt_val;
static const int MIN_SCORE = -(W * H) / 2 + 3;
static const int MAX_SCORE = (W * H + 1) / 2 - 3;
static int column_order[W];
static u64 nodes = 0;

static inline void tt_put(u64 key, int8_t v) {
    u64 i = key % TT_SIZE;
    tt_key[i] = key;
    tt_val[i] = v;
}
static inline int tt_get(u64 key) {
    u64 i = key % TT_SIZE;
    return tt_key[i] == key ? tt_val[i] : 0;
}

// Shallow positions are shared by many 8-ply roots; their bounds are kept for
// the whole run instead of competing for transposition-table slots.
static const int SHALLOW_PLY = 14;
struct Bounds {
    int8_t lo, hi;
};
static std::unordered_map<u64, Bounds> shallow;

static int negamax(const Position &P, int alpha, int beta) {
    nodes++;
    u64 next = P.non_losing();
    if (next == 0) return -(W * H - P.moves) / 2;
    if (P.moves >= W * H - 2) return 0;
    int lo = -(W * H - 2 - P.moves) / 2;
    if (alpha < lo) {
        alpha = lo;
        if (alpha >= beta) return alpha;
    }
    int hi = (W * H - 1 - P.moves) / 2;
    if (beta > hi) {
        beta = hi;
        if (alpha >= beta) return beta;
    }
    const u64 key = P.key();
    const bool keep = P.moves <= SHALLOW_PLY;
    if (keep) {
        auto it = shallow.find(key);
        if (it != shallow.end()) {
            if (alpha < it->second.lo) {
                alpha = it->second.lo;
                if (alpha >= beta) return alpha;
            }
            if (beta > it->second.hi) {
                beta = it->second.hi;
                if (alpha >= beta) return beta;
            }
        }
    } else if (int v = tt_get(key)) {
        if (v > MAX_SCORE - MIN_SCORE + 1) {  // lower bound
            lo = v + 2 * MIN_SCORE - MAX_SCORE - 2;
            if (alpha < lo) {
                alpha = lo;
                if (alpha >= beta) return alpha;
            }
        } else {  // upper bound
            hi = v + MIN_SCORE - 1;
            if (beta > hi) {
                beta = hi;
                if (alpha >= beta) return beta;
            }
        }
    }
    u64 mv[W];
    int sc[W], n = 0;
    for (int i = W; i--;) {
        if (u64 m = next & column_mask(column_order[i])) {
            int s = P.move_score(m);
            int pos = n++;
            for (; pos && sc[pos - 1] > s; --pos) {
                mv[pos] = mv[pos - 1];
                sc[pos] = sc[pos - 1];
            }
            mv[pos] = m;
            sc[pos] = s;
        }
    }
    while (n) {
        Position P2(P);
        P2.play(mv[--n]);
        int score = -negamax(P2, -beta, -alpha);
        if (score >= beta) {
            if (keep) {
                auto ins = shallow.emplace(key, Bounds{(int8_t)lo, (int8_t)hi});
                Bounds &b = ins.first->second;
                if (score > b.lo) b.lo = (int8_t)score;
            } else {
                tt_put(key, (int8_t)(score + MAX_SCORE - 2 * MIN_SCORE + 2));
            }
            return score;
        }
        if (score > alpha) alpha = score;
    }
    if (keep) {
        auto ins = shallow.emplace(key, Bounds{(int8_t)lo, (int8_t)hi});
        Bounds &b = ins.first->second;
        if (alpha < b.hi) b.hi = (int8_t)alpha;
    } else {
        tt_put(key, (int8_t)(alpha - MIN_SCORE + 1));
    }
    return alpha;
}

// Sign of the value for the side to move: 1 win, 0 draw, -1 loss.
static int weak_solve(const Position &P) {
    if (P.can_win_next()) return 1;
    int lo = -1, hi = 1;
    while (lo < hi) {
        int med = lo + (hi - lo) / 2;
        if (med <= 0 && lo / 2 < med) med = lo / 2;
        else if (med >= 0 && hi / 2 > med) med = hi / 2;
        int r = negamax(P, med, med + 1);
        if (r <= med) hi = r;
        else lo = r;
    }
    return lo > 0 ? 1 : (lo < 0 ? -1 : 0);
}

static std::vector<Position> eight_ply() {
    std::vector<Position> layer(1);
    for (int ply = 0; ply < 8; ++ply) {
        std::vector<Position> nxt;
        std::unordered_set<u64> seen;
        for (const Position &P : layer) {
            for (int c = 0; c < W; ++c) {
                if (!P.can_play(c)) continue;
                Position Q(P);
                Q.play(Q.col_move(c));
                if (has_four(Q.cur ^ Q.mask)) continue;  // mover just connected four
                if (seen.insert(Q.key()).second) nxt.push_back(Q);
            }
        }
        layer.swap(nxt);
    }
    std::sort(layer.begin(), layer.end(), [](const Position &a, const Position &b) { return a.key() < b.key(); });
    return layer;
}

static bool threatened(const Position &P) { return (P.opp_winning() & P.possible()) != 0; }

static u64 mirror(u64 b) {
    u64 r = 0;
    for (int c = 0; c < W; ++c) r |= ((b >> (c * (H + 1))) & ((1ULL << (H + 1)) - 1)) << ((W - 1 - c) * (H + 1));
    return r;
}

// One representative per left-right mirror pair: the one with the smaller key.
static bool canonical(const Position &P) { return P.key() <= mirror(P.cur) + mirror(P.mask); }

// The first player's ninth move is forced when they can win at once or must block.
static bool forced(const Position &P) { return threatened(P) || P.can_win_next(); }

int main(int argc, char **argv) {
    for (int i = 0; i < W; ++i) column_order[i] = W / 2 + (1 - 2 * (i % 2)) * (i + 1) / 2;
    std::vector<Position> all = eight_ply();
    if (argc > 1 && !strcmp(argv[1], "stats")) {
        long threat = 0, canwin = 0, both = 0;
        for (const Position &P : all) {
            bool t = threatened(P), w = P.can_win_next();
            threat += t;
            canwin += w;
            both += t && w;
        }
        printf("positions %zu threatened %ld can_win %ld both %ld\n", all.size(), threat, canwin, both);
        printf("not threatened %zu\n", all.size() - threat);
        printf("neither %zu\n", all.size() - threat - canwin + both);
        long kept = 0, sym = 0;
        for (const Position &P : all) {
            if (forced(P) || !canonical(P)) continue;
            ++kept;
            sym += mirror(P.cur) == P.cur && mirror(P.mask) == P.mask;
        }
        printf("canonical unforced %ld (self-symmetric %ld)\n", kept, sym);
        return 0;
    }
    long skip = argc > 2 ? atol(argv[2]) : 0;
    long limit = argc > 3 ? atol(argv[3]) : -1;
    long stride = argc > 4 ? atol(argv[4]) : 1;
    tt_key = (u64 *)calloc(TT_SIZE, sizeof(u64));
    tt_val = (int8_t *)calloc(TT_SIZE, 1);
    long idx = 0, done = 0;
    clock_t t0 = clock();
    for (const Position &P : all) {
        if (forced(P) || !canonical(P)) continue;
        if (idx++ < skip || (idx - 1) % stride) continue;
        if (limit >= 0 && done >= limit) break;
        int v = weak_solve(P);
        // side to move after eight plies is the first player ("x")
        u64 x = P.cur, o = P.cur ^ P.mask;
        char row[128];
        int k = 0;
        for (int c = 0; c < W; ++c)
            for (int r = 0; r < H; ++r) {
                u64 b = 1ULL << (c * (H + 1) + r);
                row[k++] = (x & b) ? 'x' : (o & b) ? 'o' : 'b';
                row[k++] = ',';
            }
        row[k] = 0;
        printf("%s%s\n", row, v > 0 ? "win" : v < 0 ? "loss" : "draw");
        ++done;
        if (done % 500 == 0) {
            fflush(stdout);
            fprintf(stderr, "%ld solved, %.1fs, %llu nodes, %zu shallow\n", skip + done,
                    double(clock() - t0) / CLOCKS_PER_SEC, (unsigned long long)nodes, shallow.size());
        }
    }
    fflush(stdout);
    return 0;
}
