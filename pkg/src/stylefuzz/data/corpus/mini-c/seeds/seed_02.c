int scale(int x, int y) {
    return x * y + 1;
}

int seed_2(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 16; i1++) { k = t + t; }
    return acc + t;
}
