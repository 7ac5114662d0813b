int scale(int x, int y) {
    return x * y + 1;
}

int seed_9(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    for (int i1 = 0; i1 < 16; i1++) { acc += a[i1] + acc; acc += a[i1] * k; }
    if (k > 5) { k = acc * k; } else { t += k * acc; }
    return acc + t;
}
