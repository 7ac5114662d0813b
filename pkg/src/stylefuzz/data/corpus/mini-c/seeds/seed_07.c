int scale(int x, int y) {
    return x * y + 1;
}

int seed_7(int n) {
    int a[8];
    int b[8];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 8; i1++) { acc = k + 9; }
    if (k > 5) { k += t * 9; } else { t = acc * t; }
    return acc + t;
}
