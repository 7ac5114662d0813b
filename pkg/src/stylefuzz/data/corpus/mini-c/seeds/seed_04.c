int scale(int x, int y) {
    return x * y + 1;
}

int seed_4(int n) {
    int a[32];
    int b[32];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 32; i1++) { acc = acc - acc; acc += acc + 5; }
    return acc + t;
}
